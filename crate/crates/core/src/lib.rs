pub mod bits;
pub mod compress;
pub mod ecc;
pub mod rearrange;
pub mod scalar;
