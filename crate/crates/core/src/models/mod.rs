//! Streaming and one-way communication wrappers around unweighted algorithms.

pub mod classes;
pub mod comm;
pub mod stream;

pub use classes::{ClassGrid, ClassKey, ClassStats, ModelBound};
pub use comm::{
    comm_weighted_wrapper, run_protocol, CommWeightedWrapper, GreedyProtocol, Message,
    OneWayProtocol, PartitionSpec, Plain, UnweightedProtocol,
};
pub use stream::{
    one_pass_greedy_weighted, run_stream, streaming_weighted_wrapper, ExactOffline,
    OnePassGreedyWeighted, RunReport, StreamOptions, StreamingAlgorithm, StreamingGreedy,
    StreamingWeightedWrapper, UnweightedStreaming, WrapperConfig,
};
