//! Rational quaternion algebras, orders, tidy lattices and lattice-point counts.

pub mod algebra;
pub mod count;
pub mod hilbert;
pub mod lattice;

pub use algebra::{disc14_fixture, disc6_fixture, verify_maximal_order, QuaternionAlgebra, RationalOrder};
pub use count::{count_by_norm, count_lattice_points, counting_bound_report, CountingReport, CountingRow, Enumerator, UpperHalfPoint};
pub use hilbert::{discriminant, local_hilbert_symbol, Place};
pub use lattice::{build_tidy_lattice, ramified_level_lattice, TidyLattice};
