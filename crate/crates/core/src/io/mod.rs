//! Readers and writers for the file formats the pipelines consume and
//! produce: PFM disparity maps, binary PPM/PGM, 8-bit PNG, and CSV for
//! benchmark output.

mod csv;
mod pfm;
mod pngio;
mod pnm;

pub use csv::{write_csv, CsvRecord};
pub use pfm::{read_pfm, read_pfm_bytes, write_pfm, Pfm, PfmHeader, PfmKind};
pub use pngio::{read_png, write_png, write_png_gray_normalized};
pub use pnm::{read_pgm16, read_ppm, write_pgm16, write_ppm};
