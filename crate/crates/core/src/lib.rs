pub mod decomposition;
pub mod graph;
pub mod router_sim;
pub mod scheme;
pub mod separator;
pub mod sssp;
pub mod tree_cover;
pub mod tree_routing;
pub mod verify;
mod util;
