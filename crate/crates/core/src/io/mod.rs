//! Persistence and rendering.

pub mod curves_csv;
pub mod heatmap;
pub mod manifest;
pub mod npy;
pub mod raster;
pub mod report;
pub mod score_file;

pub use curves_csv::{pimo_csv, roc_pro_csv};
pub use heatmap::{render_heatmap, save_heatmap_png};
pub use manifest::{Manifest, ManifestEntry};
pub use npy::{decode_npy, encode_npy, read_npy, write_npy, NpyArray, NpyDtype};
pub use raster::{load_mask, load_raster, load_score_map, resize_scores, save_mask_png, Raster, RasterKind};
pub use report::{emit_report, write_report_bundle, ModelResults, Report};
pub use score_file::{
    load_score_file, read_score_file, save_score_file, write_score_file, ScoreFileRecord,
};
