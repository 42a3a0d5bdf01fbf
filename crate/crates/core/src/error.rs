use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image is {width}x{height}, operation needs at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("glyph box contains no foreground pixel")]
    EmptyBox,
    #[error("box {0:?} lies outside the image")]
    BoxOutOfBounds(crate::Rect),
    #[error("no row band passed the variance test")]
    NoBands,
    #[error("band has no edge pixels")]
    EmptyBand,
    #[error("no plate candidate found")]
    NoPlateFound,
    #[error("no character-like components in plate crop")]
    NoCharacters,
    #[error("components form more than two text lines")]
    TooManyLines,

    #[error("template archive is missing label '{0}'")]
    MissingLabel(char),
    #[error("template archive has label '{0}' more than once")]
    DuplicateLabel(char),
    #[error("template '{label}' is {width}x{height}, expected 32x32")]
    BadDimensions { label: char, width: usize, height: usize },
    #[error("template '{0}' is constant")]
    ConstantTemplate(char),
    #[error("invalid template archive: {0}")]
    BadArchive(String),
    #[error("font source: {0}")]
    FontParse(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("truth file line {line}: {message}")]
    TruthParse { line: usize, message: String },

    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("writing diagnostics to {path}: {source}")]
    DumpIo { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}
