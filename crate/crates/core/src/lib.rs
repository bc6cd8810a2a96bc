pub mod advisories;
pub mod changes;
pub mod corpus;
pub mod ecosystem;
pub mod harness;
pub mod manifests;
pub mod policy;
pub mod scoring;
pub mod time;
pub mod version;
