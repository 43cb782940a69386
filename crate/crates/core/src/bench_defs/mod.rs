//! Synthetic benchmark catalog: objective expressions, input sampling and
//! dataset generation.

mod catalog;
pub mod expr;
mod generate;
mod sampling;

pub use catalog::{BenchmarkDef, Catalog, CatalogError, BUILTIN_MANIFEST};
pub use expr::{parse_expression, DomainViolation, Expr, ParseError, ViolationKind};
pub use generate::{
    build_inputs, expected_rows, generate_benchmark, GenerateError, GenerateOptions, GeneratedBenchmark,
    MAX_REJECTIONS,
};
pub use sampling::{sample_grid, sample_uniform, SamplingSpec, SpecError, GRID_EPS};
