pub mod ablate;
pub mod eval;
pub mod generate;
pub mod prepare;
pub mod train;
