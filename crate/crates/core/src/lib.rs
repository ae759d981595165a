//! Pointwise exterior calculus and numerical checks for contact open books,
//! Weinstein handle models and their monodromy.

pub mod cotangent;
pub mod flows;
pub mod forms;
pub mod linalg;
pub mod monodromy;
pub mod moves;
pub mod openbook;
pub mod scenario;
pub mod weinstein;
