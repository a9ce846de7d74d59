use matroidx::generate::{corpus, WeightDist};
use matroidx::rational::ratio;
use matroidx::reduction::brute_force_opt;
use matroidx::solvers::{weighted_mi_reduce, ExactSolver, GreedySolver, UnweightedSolver};

#[test]
fn pipeline_meets_composed_bound_on_random_instances() {
    let eps = ratio(1, 10);
    let mut worst = f64::INFINITY;
    let mut min_bound = f64::INFINITY;
    for g in corpus(200, 8, WeightDist::LogUniform { ratio: 50 }, 11) {
        let spec = g.generate();
        for solver in [
            &ExactSolver as &dyn UnweightedSolver,
            &GreedySolver::default(),
        ] {
            let inst = spec.build().unwrap();
            let (opt, _) = brute_force_opt(&inst).unwrap();
            let r = weighted_mi_reduce(&inst, &eps, solver).unwrap();
            assert!(inst.is_common_independent(&r.output).unwrap());
            assert!(r.weight >= &r.composed_bound * &opt, "{spec:?}");
            assert!(r.metering_holds(), "{:?}", r.stages);
            if opt > num_traits::Zero::zero() {
                worst = worst.min(matroidx::rational::to_f64(&(&r.weight / &opt)));
            }
            min_bound = min_bound.min(r.composed_bound_f64);
        }
    }
    eprintln!("worst ratio {worst}, smallest bound {min_bound}");
}
