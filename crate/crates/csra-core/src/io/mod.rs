//! File formats: the binary tensor container, the text label table, model
//! serialization, and heatmap rasterization.

pub mod heatmap;
pub mod label_file;
pub mod model_file;
pub mod tensor_file;

pub use heatmap::{render_heatmap, HeatmapFormat, ResizeMode};
pub use label_file::{
    format_labels, parse_labels, read_label_file, write_label_file, LabelRecord,
};
pub use model_file::{load_model, model_entries, model_from_entries, save_model};
pub use tensor_file::{
    decode, encode, find_entry, read_tensor_file, write_tensor_file, TensorEntry,
};
