//! Loads the built extension into a Python interpreter and runs the smoke
//! test plus a few extra calls against it.

use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// A directory holding `metavoronoi.so` linked to the freshly built library.
fn module_dir() -> tempfile::TempDir {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = ["libmetavoronoi.so", "libmetavoronoi.dylib", "metavoronoi.dll"]
        .iter()
        .map(|n| profile_dir.join(n))
        .find(|p| p.exists())
        .expect("extension library next to the test binary");
    let dir = tempfile::tempdir().unwrap();
    let name = if cfg!(windows) { "metavoronoi.pyd" } else { "metavoronoi.so" };
    std::fs::copy(&lib, dir.path().join(name)).unwrap();
    dir
}

fn python(dir: &Path, args: &[&str]) -> (bool, String) {
    let out = Command::new("python3")
        .args(args)
        .env("PYTHONPATH", dir)
        .current_dir(root())
        .output()
        .expect("python3 on PATH");
    (out.status.success(), format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn smoke_test_script() {
    let dir = module_dir();
    let (ok, out) = python(dir.path(), &["python/smoke_test.py"]);
    assert!(ok, "{out}");
    assert!(out.contains("smoke test ok"), "{out}");
}

#[test]
fn errors_surface_as_value_error() {
    let dir = module_dir();
    let script = r#"
import metavoronoi as mv
for call in (lambda: mv.check("nope"), lambda: mv.kernel([1.0], sign=0),
             lambda: mv.verify("forms/missing.manifest", 1, 64),
             lambda: mv.coefficients("forms/f0.manifest", 10**9)):
    try:
        call()
    except ValueError:
        continue
    raise SystemExit("no error raised")
print("ok")
"#;
    let (ok, out) = python(dir.path(), &["-c", script]);
    assert!(ok, "{out}");
}

#[test]
fn general_path_report() {
    let dir = module_dir();
    let script = r#"
import metavoronoi as mv
r = mv.verify("forms/f0.manifest", 1, 3, tol=1e-4, path="general")
assert r["job"]["path"] == "general" and r["job"]["delta"] == 64, r["job"]
assert r["rel_err"] < 1e-4, r["rel_err"]
"#;
    let (ok, out) = python(dir.path(), &["-c", script]);
    assert!(ok, "{out}");
}
