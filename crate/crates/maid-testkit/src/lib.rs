pub mod gen;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod trees;
pub mod efg_text;
