pub mod candidates;
pub mod decoder;
pub mod dictionary;
pub mod error;
pub mod event;
pub mod event_image;
pub mod raster;
pub mod segments;
pub mod simulator;
pub mod metrics;
pub mod pipeline;
pub mod bench;
pub mod dump;
pub mod io;
