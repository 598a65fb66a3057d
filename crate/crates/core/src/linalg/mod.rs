//! In-repo dense and sparse eigensolvers.

mod complex_eig;
mod jacobi;
mod lanczos;
mod sparse;
mod tridiag;

pub use complex_eig::{eigenspace, eigenvalues, CMatrix};
pub use jacobi::{hermitian_eigen, symmetric_eigen, HermEigen, SymEigen};
pub use lanczos::{lanczos_lowest, LanczosOptions};
pub use sparse::CsrMatrix;
pub use tridiag::tridiagonal_eigen;
