pub mod ablate;
pub mod area;
pub mod classify;
pub mod composite;
pub mod evaluate;
pub mod indices;
pub mod mask;
pub mod render;
pub mod run;
pub mod synth;
pub mod train;
