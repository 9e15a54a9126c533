//! Files in and out: datasets, arrays, filter banks and coefficient tables.

pub mod bank;
pub mod cifar;
pub mod dataset;
pub mod idx;
pub mod npy;
pub mod table;

pub use bank::{load_bank, save_bank, BankManifest};
pub use dataset::{load_cifar, load_emnist, load_idx, preprocess, replay, DatasetBatch, PreprocessOptions, Provenance};
pub use npy::{read_npy, write_npy, NpyArray, NpyData};
pub use table::{read_table, write_table, TableKind, TableManifest};
