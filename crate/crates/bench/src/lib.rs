//! Shared fixtures for the benchmarks.

use conslaw::catalog::Catalog;

pub fn catalog() -> Catalog {
    Catalog::builtin().expect("builtin catalog loads")
}
