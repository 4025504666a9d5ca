//! `pipeline extension`: a config file in, a directory of certificates out.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use coarsekit::certificates::{Scope, StrongEmbedCertificate};
use coarsekit::combinators::{prop_a_to_strong, sets_to_vector, Provenance, Targets};
use coarsekit::config::Caps;
use coarsekit::error::{Error, Result};
use coarsekit::exact::{qser, Q};
use coarsekit::generators::ball_sets;
use coarsekit::groups::{extension_pipeline, ActionSpec, Degenerate};
use coarsekit::io::{group_ball, read_certificate, write_json, CertFile, Certificate, FamilySource, ReportFile, SpaceSource};
use coarsekit::metric::{GroupSpec, Subgroup, SubgroupSpec};
use serde::{Deserialize, Serialize};

/// Where an input certificate comes from.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertInput {
    /// A strong-embed certificate file, relative to the config.
    File(PathBuf),
    /// Interval (ball) sets of the given radius on the input's own space,
    /// converted to a strong certificate.
    BallSets {
        #[serde(with = "qser")]
        radius: Q,
        #[serde(with = "qser")]
        r: Q,
    },
}

#[derive(Clone, Debug, Deserialize)]
pub struct ExtensionConfig {
    pub group: GroupSpec,
    pub radius: u64,
    pub subgroup: SubgroupSpec,
    pub targets: Targets,
    /// Certificate on the coset window `G/H`.
    pub quotient: CertInput,
    /// Certificate on the subgroup window, labeled by group elements.
    pub fibers: CertInput,
}

#[derive(Serialize)]
struct FileEntry {
    role: &'static str,
    file: String,
    kind: &'static str,
    verdict: &'static str,
}

#[derive(Serialize)]
struct ProvenanceLog {
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    degenerate: Option<Degenerate>,
    files: Vec<FileEntry>,
    stages: Vec<Provenance>,
}

fn load(input: &CertInput, base: &Path, space: &SpaceSource, caps: &Caps, seed: u64) -> Result<StrongEmbedCertificate> {
    match input {
        CertInput::File(path) => match read_certificate(&base.join(path), caps, seed)?.cert {
            Certificate::StrongEmbed(c) => Ok(c),
            other => Err(Error::Malformed(format!(
                "{}: expected a strong-embed certificate, got {}",
                path.display(),
                other.kind()
            ))),
        },
        CertInput::BallSets { radius, r } => {
            let sets = ball_sets(space.resolve(caps, seed)?, radius, r)?.cert;
            Ok(prop_a_to_strong(&sets_to_vector(&sets)?.cert)?.cert)
        }
    }
}

/// Runs the pipeline and writes every certificate, its report and the
/// provenance log into `out`. Returns the final report.
pub fn run(config_path: &Path, out: &Path, caps: &Caps, seed: u64) -> Result<ReportFile> {
    let config: ExtensionConfig = coarsekit::io::read_json(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(out)?;

    let quotient_src = SpaceSource::Quotient {
        group: config.group.clone(),
        radius: config.radius,
        subgroup: config.subgroup.clone(),
    };
    let sub_src = SpaceSource::Subgroup {
        group: config.group.clone(),
        radius: config.radius,
        subgroup: config.subgroup.clone(),
    };
    let quotient = load(&config.quotient, base, &quotient_src, caps, seed).map_err(|e| e.in_stage("quotient input"))?;
    let fibers = load(&config.fibers, base, &sub_src, caps, seed).map_err(|e| e.in_stage("fiber input"))?;

    let ball = Arc::new(group_ball(&config.group, config.radius, caps)?);
    let h = Subgroup::from_spec(&config.subgroup, ball.model())?;

    let mut files = Vec::new();
    let mut write = |role: &'static str, file: CertFile| -> Result<bool> {
        let report = ReportFile::new(seed, &file.cert, file.cert.verify(Scope::Window)?);
        let name = format!("{role}.json");
        write_json(&out.join(&name), &file.encode())?;
        write_json(&out.join(format!("{role}.report.json")), &report)?;
        files.push(FileEntry {
            role,
            file: name,
            kind: file.cert.kind(),
            verdict: if report.passed() { "pass" } else { "fail" },
        });
        Ok(report.passed())
    };
    write("quotient", CertFile::new(Certificate::StrongEmbed(quotient.clone())).with_space(quotient_src))?;
    write("subgroup", CertFile::new(Certificate::StrongEmbed(fibers.clone())).with_space(sub_src))?;

    let result = extension_pipeline(ball, &h, &quotient, &fibers, &config.targets, seed)?;
    if let Some(family) = result.family.clone() {
        let src = FamilySource::Orbits {
            group: config.group.clone(),
            radius: config.radius,
            action: ActionSpec::Cosets {
                subgroup: config.subgroup.clone(),
            },
        };
        write("family", CertFile::new(Certificate::SeFamily(family)).with_family(src))?;
    }
    if let Some(fibers) = result.fibers.clone() {
        write("fibers", CertFile::new(Certificate::EquiFamily(fibers)))?;
    }
    let final_src = SpaceSource::Cayley {
        group: config.group.clone(),
        radius: config.radius,
    };
    let final_file = CertFile::new(Certificate::StrongEmbed(result.cert.clone())).with_space(final_src);
    write("final", final_file.clone())?;

    let report = ReportFile::new(seed, &final_file.cert, result.report.clone());
    write_json(&out.join("report.json"), &report)?;
    let log = ProvenanceLog {
        seed,
        degenerate: result.degenerate,
        files,
        stages: result.stages,
    };
    write_json(&out.join("provenance.json"), &log)?;
    Ok(report)
}
