pub mod diagnostic;
pub mod dot;
pub mod dsl;
pub mod expr;
pub mod fixtures;
pub mod metamodel;
pub mod model;
pub mod sim;
pub mod validate;
