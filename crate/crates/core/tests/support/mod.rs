pub mod oracles;
pub mod failing;
