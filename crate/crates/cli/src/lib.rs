//! File formats and rendering behind the `untangle` command-line tool.

pub mod formats;
pub mod svg;

pub use formats::{
    configuration_to_instance, file_to_record, flip_to_record, from_json_str,
    instance_to_configuration, record_to_csv, record_to_file, record_to_flip, replay_record,
    to_json_string, FlipRecord, FormatError, InstanceFile, LineSetRecord, PointRecord,
    RecordFile, StepRecord,
};
pub use svg::render_svg;
