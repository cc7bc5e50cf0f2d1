use std::env;
use std::fs;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("read cbindgen.toml");
    let header = cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate().expect("generate C header");

    let mut text = Vec::new();
    header.write(&mut text);
    let path = crate_dir.join("include").join("hahnloc.h");
    // Leave an unchanged header alone so its timestamp stays put.
    if fs::read(&path).ok().as_deref() != Some(&text[..]) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, text).expect("write include/hahnloc.h");
    }
}
