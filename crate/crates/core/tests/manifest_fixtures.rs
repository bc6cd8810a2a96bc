//! Each fixture directory holds one manifest and a hand-written
//! `expected.tsv`: name, spec, pin (`-` when absent), scope, line.

use std::fs;
use std::path::{Path, PathBuf};

use depdec_core::ecosystem::Ecosystem;
use depdec_core::manifests::spec::spec_admits;
use depdec_core::manifests::{
    detect_format, parse_lockfile, parse_manifest, ManifestFormat, Scope,
};
use proptest::prelude::*;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/manifests")
}

fn scope_name(s: Scope) -> &'static str {
    match s {
        Scope::Runtime => "runtime",
        Scope::Dev => "dev",
        Scope::Optional => "optional",
    }
}

fn check(dir: &str, file: &str, eco: Ecosystem) {
    let root = fixtures().join(dir);
    let path = root.join(file);
    let format = detect_format(&path).expect("fixture has a manifest name");
    assert_eq!(format.ecosystem(), eco);
    let text = fs::read_to_string(&path).unwrap();
    let snap = parse_manifest(format, &text, file).unwrap();
    let got: Vec<String> = snap
        .decls
        .iter()
        .map(|d| {
            assert_eq!(d.ecosystem, eco);
            assert_eq!(d.source_path, file);
            let pin = d
                .pinned
                .as_ref()
                .map_or("-".to_string(), |v| v.normalized());
            format!(
                "{}\t{}\t{}\t{}\t{}",
                d.name,
                d.spec,
                pin,
                scope_name(d.scope),
                d.source_line
            )
        })
        .collect();
    let want: Vec<String> = fs::read_to_string(root.join("expected.tsv"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(got, want, "{dir}");
    // determinism
    assert_eq!(parse_manifest(format, &text, file).unwrap(), snap);
}

#[test]
fn npm_fixture() {
    check("npm", "package.json", Ecosystem::Npm);
}

#[test]
fn pypi_fixture() {
    check("pypi", "requirements.txt", Ecosystem::PyPi);
}

#[test]
fn maven_fixture() {
    check("maven", "pom.xml", Ecosystem::Maven);
}

#[test]
fn cargo_fixture() {
    check("cargo", "Cargo.toml", Ecosystem::Cargo);
}

#[test]
fn go_fixture() {
    check("go", "go.mod", Ecosystem::Go);
}

#[test]
fn rubygems_fixture() {
    check("rubygems", "Gemfile", Ecosystem::RubyGems);
}

#[test]
fn packagist_fixture() {
    check("packagist", "composer.json", Ecosystem::Packagist);
}

#[test]
fn skip_tallies() {
    let read = |dir: &str, file: &str| {
        let path = fixtures().join(dir).join(file);
        let text = fs::read_to_string(&path).unwrap();
        parse_manifest(detect_format(&path).unwrap(), &text, file)
            .unwrap()
            .skipped
    };
    let npm = read("npm", "package.json");
    assert_eq!(npm.non_registry, 2);
    let pypi = read("pypi", "requirements.txt");
    assert_eq!((pypi.comments, pypi.non_registry), (1, 2));
    assert_eq!(read("maven", "pom.xml").non_registry, 1);
    assert_eq!(read("cargo", "Cargo.toml").non_registry, 1);
    assert_eq!(read("go", "go.mod").indirect, 1);
    let gems = read("rubygems", "Gemfile");
    assert_eq!((gems.comments, gems.non_registry), (1, 1));
    assert_eq!(read("packagist", "composer.json").non_registry, 3);
}

#[test]
fn python_lockfile_fixture() {
    let root = fixtures().join("pypi-lock");
    let text = fs::read_to_string(root.join("poetry.lock")).unwrap();
    let got: Vec<String> = parse_lockfile(ManifestFormat::PythonLockfile, &text)
        .unwrap()
        .into_iter()
        .map(|(n, v)| format!("{n}\t{}", v.raw()))
        .collect();
    let want: Vec<String> = fs::read_to_string(root.join("expected.tsv"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(got, want);
}

#[test]
fn malformed_inputs_are_rejected() {
    let cases = [
        (
            ManifestFormat::NpmManifest,
            "package.json",
            "{\"dependencies\": {",
        ),
        (
            ManifestFormat::NpmManifest,
            "package.json",
            "{\"dependencies\": {\"a\": 1}}",
        ),
        (
            ManifestFormat::PythonRequirements,
            "requirements.txt",
            "requests 2.0\n",
        ),
        (
            ManifestFormat::MavenPom,
            "pom.xml",
            "<project><dependencies>",
        ),
        (
            ManifestFormat::CargoManifest,
            "Cargo.toml",
            "[dependencies\nserde = 1",
        ),
        (
            ManifestFormat::GoMod,
            "go.mod",
            "module x\nrequire (\n  a v1.0.0\n",
        ),
        (ManifestFormat::Gemfile, "Gemfile", "gem 'a'\nend\n"),
        (ManifestFormat::ComposerManifest, "composer.json", "[1,2]"),
    ];
    for (format, path, text) in cases {
        assert!(
            parse_manifest(format, text, path).is_err(),
            "{format:?} {text:?}"
        );
    }
}

fn pinned_spec(eco: Ecosystem) -> impl Strategy<Value = String> {
    let triple = (0u64..30, 0u64..30, 0u64..30).prop_map(|(a, b, c)| format!("{a}.{b}.{c}"));
    triple.prop_flat_map(move |v| {
        let forms: Vec<String> = match eco {
            Ecosystem::Npm => vec![
                v.clone(),
                format!("={v}"),
                format!("^{v}"),
                format!(">={v} <99.0.0"),
            ],
            Ecosystem::PyPi => vec![
                format!("=={v}"),
                format!(">={v},<99"),
                format!("~={v}"),
                format!("==={v}"),
            ],
            Ecosystem::Cargo => vec![format!("={v}"), v.clone(), format!(">={v}, <99")],
            Ecosystem::Maven => vec![v.clone(), format!("[{v}]"), format!("[{v},99)")],
            Ecosystem::Go => vec![format!("v{v}")],
            Ecosystem::RubyGems => vec![
                v.clone(),
                format!("= {v}"),
                format!("~> {v}"),
                format!(">= {v}, < 99"),
            ],
            Ecosystem::Packagist => vec![
                v.clone(),
                format!("=={v}"),
                format!("^{v}"),
                format!(">={v},<99"),
            ],
        };
        proptest::sample::select(forms)
    })
}

fn eco_and_spec() -> impl Strategy<Value = (Ecosystem, String)> {
    proptest::sample::select(Ecosystem::ALL.to_vec())
        .prop_flat_map(|eco| pinned_spec(eco).prop_map(move |s| (eco, s)))
}

proptest! {
    #[test]
    fn pins_satisfy_their_spec((eco, spec) in eco_and_spec()) {
        let Some(pin) = depdec_core::manifests::spec::pinned_version(eco, &spec) else {
            return Ok(());
        };
        // Go requirements are bare versions with no comparator syntax
        if eco == Ecosystem::Go {
            prop_assert_eq!(format!("v{}", pin.normalized()), spec);
        } else {
            prop_assert_eq!(spec_admits(eco, &spec, &pin), Some(true), "{} {}", eco, spec);
        }
    }
}
