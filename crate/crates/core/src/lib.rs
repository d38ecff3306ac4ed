pub mod algebra;
pub mod certifier;
pub mod clifford;
pub mod dunford;
pub mod kk;
pub mod random;
pub mod square_sum;
pub mod sum_engine;

pub use algebra::{
    AlgebraError, CStarElement, Mat, MatrixJson, ModuleOperator, ModuleVector, SelfAdjointOperator,
    Sign, C64,
};
