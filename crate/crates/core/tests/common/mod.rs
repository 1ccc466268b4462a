#![allow(dead_code)]

use std::path::PathBuf;

use organiq::data::{filter_class, read_labelled, ImageSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn images_path() -> PathBuf {
    fixture("mnist-subset-images.idx3-ubyte")
}

pub fn labels_path() -> PathBuf {
    fixture("mnist-subset-labels.idx1-ubyte")
}

/// Images of one digit from the bundled subset (classes 0 and 1, 500 each).
pub fn class_images(class: u8) -> ImageSet {
    let set = read_labelled(images_path(), labels_path()).expect("fixture readable");
    filter_class(&set, class).expect("labelled fixture")
}
