//! In-memory query engine over factorised relational data.
//!
//! Query results are held as f-representations: nested unions and
//! products of singletons whose nesting structure is given by an
//! [`FTree`]. The engine builds them from flat relations, transforms them
//! with the f-plan operators, searches for good plans, and ships a flat
//! sort-merge engine used as a correctness oracle.

pub mod baseline;
pub mod catalog;
pub mod error;
pub mod frep;
pub mod ftree;
pub mod limits;
pub mod operators;
pub mod optimizer;
pub mod query;
mod sexpr;
pub mod value;
pub mod workload;

pub use catalog::{AttrId, Catalogue, Database, Relation, Schema};
pub use error::{Error, Result};
pub use frep::FRep;
pub use ftree::{CostMode, FTree, NodeId};
pub use limits::Limits;
pub use optimizer::{FPlan, PlanOrder, Planner, Search, Step};
pub use query::{CmpOp, Query};
pub use value::Value;
