//! Dataset persistence, reconstruction outputs and image rendering.

mod dataset;
mod render;

pub use dataset::{
    load_dataset, load_plane_bin, load_reconstruction, read_trace_csv, save_dataset,
    save_plane_bin, save_reconstruction, write_bench_csv, DatasetMeta, ReconstructionMeta,
    BENCH_CSV_HEADER, FORMAT_VERSION, TRACE_CSV_HEADER,
};
pub use render::{render_from_dir, render_plane, RenderTarget};
