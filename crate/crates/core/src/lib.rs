//! Solver library for matrix-valued Nevanlinna-class interpolation problems:
//! tangential Nevanlinna-Pick interpolation and full/truncated Hamburger
//! moment problems, regular and singular.
//!
//! The library builds a structured rational resolvent matrix for each problem
//! and parametrizes all solutions by linear-fractional transforms over
//! Nevanlinna parameter pairs. Every construction can be cross-validated
//! against an independent finite-dimensional selfadjoint-extension solver
//! that never touches the resolvent-matrix machinery.
//!
//! Modules:
//! * [`matkit`] - dense complex linear algebra kernel (eigen, rank, PSD,
//!   generalized inverses, structured Lyapunov/Sylvester solver).
//! * [`nevanlinna`] - closed-form matrix Nevanlinna functions and pairs,
//!   kernel Gram matrices, normalization, class-membership checks.
//! * [`aip`] - data-set validation, resolvent-matrix construction, the
//!   J-unitary corrector, admissible parameters and the LFT solve.
//! * [`problems`] - tangential and moment front-ends: Hankel analysis,
//!   invariant pseudoinverses, orthogonal polynomials, measure extraction.
//! * [`oracle`] - direct selfadjoint-extension solver used as ground truth.
//! * [`report`] - named verification checks with residuals and tolerances.

pub mod aip;
pub mod matkit;
pub mod nevanlinna;
pub mod oracle;
pub mod polyx;
pub mod problems;
pub mod report;

pub use matkit::{CMat, CVec, C64};

#[cfg(test)]
mod concurrency_contract {
    // all values are immutable after construction and operations are pure,
    // so every public type must be shareable across threads
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn public_types_are_send_sync() {
        assert_send_sync::<crate::matkit::Tolerance>();
        assert_send_sync::<crate::nevanlinna::NevanlinnaObject>();
        assert_send_sync::<crate::nevanlinna::DiscreteMeasure>();
        assert_send_sync::<crate::aip::AipDataSet>();
        assert_send_sync::<crate::aip::ThetaRealization>();
        assert_send_sync::<crate::aip::GammaSubspace>();
        assert_send_sync::<crate::oracle::AdjointRelationModel>();
        assert_send_sync::<crate::oracle::ExtensionSpec>();
        assert_send_sync::<crate::problems::MomentSequence>();
        assert_send_sync::<crate::problems::TangentialSpec>();
        assert_send_sync::<crate::problems::OrthogonalSystem>();
        assert_send_sync::<crate::report::VerificationReport>();
        assert_send_sync::<crate::polyx::MatPoly>();
    }
}
