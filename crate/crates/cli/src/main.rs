//! `coarsekit`: batch front-end for certificates of coarse-geometric properties.
//!
//! Exit codes: 0 success or pass, 1 verification failure or a refused
//! operation, 2 malformed input.

mod args;
mod pipeline;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coarsekit::certificates::{verify_two_prime, Scope};
use coarsekit::combinators::{
    combine_exact, combine_se_coarse, combine_se_strong, exact_to_se_family, prop_a_to_strong, sets_to_vector,
    strong_to_coarse, CoarseTargets, Combined, Provenance, Targets,
};
use coarsekit::config::{Caps, RunConfig};
use coarsekit::error::{Error, Result};
use coarsekit::exact::{Real, Q};
use coarsekit::generators::{
    ball_sets, family_ball_field, fiber_ball_equi, finite_uniform, folner_prop_a, tree_ray_prop_a, FiberFlavor,
};
use coarsekit::groups::{compute_tk, displacement_constant, orbit_decomposition, GroupAction};
use coarsekit::io::{
    group_ball, read_certificate, read_json, write_certificate, CertFile, Certificate, FamilySource, ReportFile,
    SpaceSource,
};
use coarsekit::metric::GroupSpec;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "coarsekit", version, about = "Exact certificates for property A and strong embeddability")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed for sampled checks, recorded in every report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = Caps::default().max_points)]
    max_points: usize,
    #[arg(long, global = true, default_value_t = Caps::default().max_radius)]
    max_radius: u64,
    #[arg(long, global = true, default_value_t = Caps::default().max_universe)]
    max_universe: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Build or check metric spaces.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Emit a certificate from a standard construction.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Verify a certificate file and write its report.
    Verify {
        cert: PathBuf,
        #[arg(long, value_enum, default_value_t = ScopeArg::Window)]
        scope: ScopeArg,
        /// Also compare mixed and single tails at these radii (strong-embed only).
        #[arg(long, value_parser = args::rational)]
        two_prime: Vec<Q>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Pass a certificate through one implication.
    Convert {
        #[arg(value_enum)]
        op: ConvertOp,
        input: PathBuf,
        #[command(flatten)]
        out: Outputs,
    },
    /// Combine an outer family certificate with fiber certificates.
    Combine {
        #[arg(value_enum)]
        op: CombineOp,
        #[arg(long)]
        outer: PathBuf,
        #[arg(long)]
        fibers: PathBuf,
        #[arg(long, value_parser = args::rational)]
        r: Q,
        #[arg(long, value_parser = args::real)]
        eps: Real,
        /// Far target, `se-coarse` only.
        #[arg(long, value_parser = args::rational)]
        delta: Option<Q>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Orbits, T_k profiles and displacement constants of group actions.
    Group {
        #[arg(value_enum)]
        op: GroupOp,
        #[command(flatten)]
        action: ActionArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Multi-stage constructions driven by a config file.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Subcommand)]
enum SpaceCmd {
    /// Write a space recipe (or the inline table with `--inline`).
    Build {
        #[arg(long)]
        group: String,
        #[arg(long)]
        radius: u64,
        /// The coset window of this subgroup.
        #[arg(long, conflicts_with = "subgroup")]
        quotient: Option<String>,
        /// The elements of this subgroup inside the ball.
        #[arg(long)]
        subgroup: Option<String>,
        #[arg(long)]
        inline: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check the metric axioms of a space file; exit 1 on a violation.
    Check {
        space: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Følner boxes in a Zⁿ window.
    Folner {
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long)]
        half_width: u64,
        #[arg(long)]
        window: u64,
        #[arg(long, value_parser = args::rational)]
        r: Q,
        #[command(flatten)]
        out: Outputs,
    },
    /// Geodesic rays toward a fixed end of a free group.
    TreeRay {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        window: u64,
        #[arg(long, value_parser = args::rational)]
        r: Q,
        #[command(flatten)]
        out: Outputs,
    },
    /// One set holding the whole (finite) space.
    FiniteUniform {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_parser = args::rational)]
        r: Q,
        #[command(flatten)]
        out: Outputs,
    },
    /// Balls of a fixed radius around every point.
    BallSets {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_parser = args::rational)]
        radius: Q,
        #[arg(long, value_parser = args::rational)]
        r: Q,
        #[command(flatten)]
        out: Outputs,
    },
    /// Exact family certificate from images of balls.
    FamilyBall {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, value_parser = args::rational)]
        radius: Q,
        #[arg(long, value_parser = args::rational)]
        r: Q,
        #[command(flatten)]
        out: Outputs,
    },
    /// Ball fields on every fiber of a family.
    FiberBalls {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, value_parser = args::rational)]
        radius: Q,
        #[arg(long, value_parser = args::rational)]
        r: Q,
        #[arg(long, value_enum)]
        flavor: FlavorArg,
        #[command(flatten)]
        out: Outputs,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Strong embedding of a group from a normal subgroup and its quotient.
    Extension {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct Outputs {
    /// Certificate output; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Verification report of the output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Provenance block of the operation.
    #[arg(long)]
    provenance: Option<PathBuf>,
}

#[derive(Args)]
struct ActionArgs {
    #[arg(long)]
    group: String,
    #[arg(long)]
    radius: u64,
    /// `translation`, `shift:coord,scale,window`, `cosets:<subgroup>`, JSON or `@file`.
    #[arg(long)]
    action: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Window,
    Ambient,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvertOp {
    SetsToVector,
    PropAToStrong,
    StrongToCoarse,
    ExactToSe,
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineOp {
    Exact,
    SeCoarse,
    SeStrong,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupOp {
    Orbits,
    Tk,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Exact,
    Coarse,
    Strong,
}

/// What a command produced: a verdict for the exit code.
enum Outcome {
    Done,
    Verdict(bool),
}

struct Ctx {
    caps: Caps,
    seed: u64,
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => coarsekit::io::write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

impl Ctx {
    fn certificate(&self, path: &Path) -> Result<CertFile> {
        read_certificate(path, &self.caps, self.seed).map_err(|e| match e {
            Error::Json(j) => Error::Parse(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    fn write(&self, out: &Outputs, file: &CertFile, provenance: Option<&Provenance>) -> Result<Outcome> {
        let report = ReportFile::new(self.seed, &file.cert, file.cert.verify(Scope::Window)?);
        match &out.out {
            Some(path) => write_certificate(path, file)?,
            None => emit(None, &file.encode())?,
        }
        if let Some(path) = &out.report {
            emit(Some(path), &report)?;
        }
        if let (Some(path), Some(p)) = (&out.provenance, provenance) {
            emit(Some(path), p)?;
        }
        Ok(Outcome::Verdict(report.passed()))
    }

    fn write_combined<C>(
        &self,
        out: &Outputs,
        c: Combined<C>,
        wrap: impl FnOnce(C) -> Certificate,
        space: Option<SpaceSource>,
        family: Option<FamilySource>,
    ) -> Result<Outcome> {
        let mut file = CertFile::new(wrap(c.cert));
        file.space = space;
        file.family = family;
        self.write(out, &file, Some(&c.provenance))
    }

    fn space(&self, path: &Path) -> Result<(SpaceSource, Arc<coarsekit::metric::FiniteMetricSpace>)> {
        let src: SpaceSource = read_json(path)?;
        let space = src.resolve(&self.caps, self.seed)?;
        Ok((src, space))
    }

    fn family(&self, path: &Path) -> Result<(FamilySource, Arc<coarsekit::metric::SetMapFamily>)> {
        let src: FamilySource = read_json(path)?;
        let family = src.resolve(&self.caps, self.seed)?;
        Ok((src, family))
    }
}

fn wrong_kind(what: &str, got: &Certificate) -> Error {
    Error::Malformed(format!("{what} needs a different certificate, got {}", got.kind()))
}

fn space_cmd(ctx: &Ctx, cmd: SpaceCmd) -> Result<Outcome> {
    match cmd {
        SpaceCmd::Build {
            group,
            radius,
            quotient,
            subgroup,
            inline,
            out,
        } => {
            let group = args::group(&group)?;
            let src = match (quotient, subgroup) {
                (Some(h), _) => SpaceSource::Quotient {
                    group,
                    radius,
                    subgroup: args::subgroup(&h)?,
                },
                (None, Some(h)) => SpaceSource::Subgroup {
                    group,
                    radius,
                    subgroup: args::subgroup(&h)?,
                },
                (None, None) => SpaceSource::Cayley { group, radius },
            };
            let space = src.resolve(&ctx.caps, ctx.seed)?;
            let src = if inline { SpaceSource::inline(&space) } else { src };
            emit(out.as_deref(), &src)?;
            Ok(Outcome::Done)
        }
        SpaceCmd::Check { space, out } => {
            let (_, space) = ctx.space(&space)?;
            let check = space.check(ctx.seed);
            emit(out.as_deref(), &check)?;
            Ok(Outcome::Verdict(check.ok()))
        }
    }
}

fn generate_cmd(ctx: &Ctx, cmd: GenerateCmd) -> Result<Outcome> {
    match cmd {
        GenerateCmd::Folner {
            rank,
            half_width,
            window,
            r,
            out,
        } => {
            let g = folner_prop_a(rank, half_width, window, &r, &ctx.caps)?;
            let group = if rank == 1 { GroupSpec::Z } else { GroupSpec::Zn { n: rank } };
            let file = CertFile::new(Certificate::PropASets(g.cert)).with_space(SpaceSource::Cayley { group, radius: window });
            ctx.write(&out, &file, None)
        }
        GenerateCmd::TreeRay {
            rank,
            length,
            window,
            r,
            out,
        } => {
            let g = tree_ray_prop_a(rank, length, window, &r, &ctx.caps)?;
            let src = SpaceSource::Cayley {
                group: GroupSpec::Free { rank },
                radius: window,
            };
            ctx.write(&out, &CertFile::new(Certificate::PropASets(g.cert)).with_space(src), None)
        }
        GenerateCmd::FiniteUniform { space, r, out } => {
            let (src, space) = ctx.space(&space)?;
            let g = finite_uniform(space, &r)?;
            ctx.write(&out, &CertFile::new(Certificate::PropASets(g.cert)).with_space(src), None)
        }
        GenerateCmd::BallSets { space, radius, r, out } => {
            let (src, space) = ctx.space(&space)?;
            let g = ball_sets(space, &radius, &r)?;
            ctx.write(&out, &CertFile::new(Certificate::PropASets(g.cert)).with_space(src), None)
        }
        GenerateCmd::FamilyBall { family, radius, r, out } => {
            let (src, family) = ctx.family(&family)?;
            let g = family_ball_field(family, &radius, &r)?;
            ctx.write(&out, &CertFile::new(Certificate::ExactFamily(g.cert)).with_family(src), None)
        }
        GenerateCmd::FiberBalls {
            family,
            radius,
            r,
            flavor,
            out,
        } => {
            let (_, family) = ctx.family(&family)?;
            let flavor = match flavor {
                FlavorArg::Exact => FiberFlavor::Exact,
                FlavorArg::Coarse => FiberFlavor::Coarse,
                FlavorArg::Strong => FiberFlavor::Strong,
            };
            let g = fiber_ball_equi(&family, &radius, &r, flavor)?;
            ctx.write(&out, &CertFile::new(Certificate::EquiFamily(g.cert)), None)
        }
    }
}

fn verify_cmd(ctx: &Ctx, cert: &Path, scope: ScopeArg, two_prime: &[Q], out: Option<&Path>) -> Result<Outcome> {
    let file = ctx.certificate(cert)?;
    let scope = match scope {
        ScopeArg::Window => Scope::Window,
        ScopeArg::Ambient => Scope::Ambient,
    };
    let mut report = ReportFile::new(ctx.seed, &file.cert, file.cert.verify(scope)?);
    if !two_prime.is_empty() {
        let Certificate::StrongEmbed(c) = &file.cert else {
            return Err(wrong_kind("--two-prime", &file.cert));
        };
        report.two_prime = two_prime
            .iter()
            .map(|s| verify_two_prime(c, s, scope))
            .collect::<Result<_>>()?;
    }
    emit(out, &report)?;
    Ok(Outcome::Verdict(report.passed()))
}

fn convert_cmd(ctx: &Ctx, op: ConvertOp, input: &Path, out: &Outputs) -> Result<Outcome> {
    let file = ctx.certificate(input)?;
    let (space, family) = (file.space.clone(), file.family.clone());
    match (op, file.cert) {
        (ConvertOp::SetsToVector, Certificate::PropASets(c)) => {
            ctx.write_combined(out, sets_to_vector(&c)?, Certificate::PropAVector, space, None)
        }
        (ConvertOp::PropAToStrong, Certificate::PropAVector(c)) => {
            ctx.write_combined(out, prop_a_to_strong(&c)?, Certificate::StrongEmbed, space, None)
        }
        (ConvertOp::StrongToCoarse, Certificate::StrongEmbed(c)) => {
            ctx.write_combined(out, strong_to_coarse(&c)?, Certificate::CoarseWitness, space, None)
        }
        (ConvertOp::ExactToSe, Certificate::ExactFamily(c)) => {
            ctx.write_combined(out, exact_to_se_family(&c)?, Certificate::SeFamily, None, family)
        }
        (_, other) => Err(wrong_kind("this conversion", &other)),
    }
}

fn combine_cmd(
    ctx: &Ctx,
    op: CombineOp,
    outer: &Path,
    fibers: &Path,
    targets: Targets,
    delta: Option<Q>,
    out: &Outputs,
) -> Result<Outcome> {
    let outer = ctx.certificate(outer)?;
    let Certificate::EquiFamily(fib) = ctx.certificate(fibers)?.cert else {
        return Err(Error::Malformed("--fibers must be an equi-family certificate".into()));
    };
    // the combined certificate lives on the outer family's domain
    let space = outer.space.clone();
    match (op, &outer.cert) {
        (CombineOp::Exact, Certificate::ExactFamily(c)) => {
            ctx.write_combined(out, combine_exact(c, &fib, &targets)?, Certificate::PropAVector, space, None)
        }
        (CombineOp::SeCoarse, Certificate::SeFamily(c)) => {
            let delta = delta.ok_or_else(|| Error::Malformed("se-coarse needs --delta".into()))?;
            let targets = CoarseTargets {
                r: targets.r,
                eps: targets.eps,
                delta,
            };
            ctx.write_combined(out, combine_se_coarse(c, &fib, &targets)?, Certificate::CoarseWitness, space, None)
        }
        (CombineOp::SeStrong, Certificate::SeFamily(c)) => {
            ctx.write_combined(out, combine_se_strong(c, &fib, &targets)?, Certificate::StrongEmbed, space, None)
        }
        (_, other) => Err(wrong_kind("this combination", other)),
    }
}

#[derive(Serialize)]
struct OrbitSummary {
    action: String,
    orbits: Vec<OrbitEntry>,
}

#[derive(Serialize)]
struct OrbitEntry {
    representative: String,
    size: usize,
    stabilizer: String,
    cosets: usize,
}

fn group_cmd(ctx: &Ctx, op: GroupOp, a: &ActionArgs, out: Option<&Path>) -> Result<Outcome> {
    let group = args::group(&a.group)?;
    let spec = args::action(&a.action)?;
    let ball = Arc::new(group_ball(&group, a.radius, &ctx.caps)?);
    let action = GroupAction::from_spec(&spec, ball, &ctx.caps, ctx.seed)?;
    let orbits = orbit_decomposition(&action, ctx.seed)?;
    match op {
        GroupOp::Orbits => {
            let space = action.space();
            let summary = OrbitSummary {
                action: action.name().to_string(),
                orbits: orbits
                    .representatives
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| OrbitEntry {
                        representative: space.label(x).to_string(),
                        size: orbits.orbit_of.iter().filter(|&&o| o == i).count(),
                        stabilizer: orbits.stabilizers[i].name().to_string(),
                        cosets: orbits.cosets[i].len(),
                    })
                    .collect(),
            };
            emit(out, &summary)?;
        }
        GroupOp::Tk => emit(out, &compute_tk(&action, &orbits)?)?,
        GroupOp::Constant => emit(out, &displacement_constant(&action, &orbits))?,
    }
    Ok(Outcome::Done)
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<Outcome> {
    match command {
        Command::Space(cmd) => space_cmd(ctx, cmd),
        Command::Generate(cmd) => generate_cmd(ctx, cmd),
        Command::Verify {
            cert,
            scope,
            two_prime,
            out,
        } => verify_cmd(ctx, &cert, scope, &two_prime, out.as_deref()),
        Command::Convert { op, input, out } => convert_cmd(ctx, op, &input, &out),
        Command::Combine {
            op,
            outer,
            fibers,
            r,
            eps,
            delta,
            out,
        } => combine_cmd(ctx, op, &outer, &fibers, Targets { r, eps }, delta, &out),
        Command::Group { op, action, out } => group_cmd(ctx, op, &action, out.as_deref()),
        Command::Pipeline(PipelineCmd::Extension { config, out_dir }) => {
            let report = pipeline::run(&config, &out_dir, &ctx.caps, ctx.seed)?;
            eprintln!("final certificate: {}", out_dir.join("final.json").display());
            Ok(Outcome::Verdict(report.passed()))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ParameterMismatch { .. } | Error::Refused(_) | Error::Truncation(_) | Error::Resource(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = RunConfig {
        caps: Caps {
            max_points: cli.run.max_points,
            max_radius: cli.run.max_radius,
            max_universe: cli.run.max_universe,
        },
        parallelism: cli.run.threads,
        seed: cli.run.seed,
    };
    let ctx = Ctx {
        caps: config.caps.clone(),
        seed: config.seed,
    };
    let result = config
        .validate()
        .and_then(|()| config.install(|| dispatch(&ctx, cli.command)))
        .and_then(|r| r);
    match result {
        Ok(Outcome::Done) | Ok(Outcome::Verdict(true)) => ExitCode::SUCCESS,
        Ok(Outcome::Verdict(false)) => {
            eprintln!("verdict: fail");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
