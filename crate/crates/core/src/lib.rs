//! Flow systems: spheres of schemes whose flowthings move through the five
//! stages receive, process, create, release and transfer.

pub mod corpus;
pub mod dsl;
pub mod export;
pub mod metrics;
pub mod model;
pub mod simulator;
pub mod validator;
