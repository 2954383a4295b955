use std::path::Path;
use std::process::Command;

const HEADER: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/include/qoptic.h");

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(HEADER).unwrap();
    for f in [
        "qoptic_setup_from_toml",
        "qoptic_setup_load",
        "qoptic_setup_free",
        "qoptic_setup_param_count",
        "qoptic_setup_param_name",
        "qoptic_setup_param_values",
        "qoptic_evaluate",
        "qoptic_gradient",
        "qoptic_distribution_compute",
        "qoptic_distribution_len",
        "qoptic_distribution_probability",
        "qoptic_distribution_label",
        "qoptic_distribution_valid_fraction",
        "qoptic_distribution_free",
        "qoptic_last_error_message",
        "qoptic_version",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(h.contains("typedef struct QopticSetup QopticSetup;"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::env::var("CC").or_else(|_| which("cc")) else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"qoptic.h\"\nint main(void) {\n  QopticSetup *s = 0;\n  QopticStatus st = qoptic_setup_from_toml(\"\", &s);\n  qoptic_setup_free(s);\n  return st == QOPTIC_STATUS_OK;\n}\n",
    )
    .unwrap();
    let include = Path::new(HEADER).parent().unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which(name: &str) -> Result<String, ()> {
    let path = std::env::var_os("PATH").ok_or(())?;
    std::env::split_paths(&path)
        .map(|d| d.join(name))
        .find(|p| p.is_file())
        .map(|p| p.to_string_lossy().into_owned())
        .ok_or(())
}
