use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sublorentz_core::fields::faraday;
use sublorentz_core::geodesic::{abnormal_kernel, integrate};
use sublorentz_core::magnetic::{sphere_sample, wavefront_sample, PointCloud, SphereSpec};
use sublorentz_core::nonholonomy::{box_exponents, growth_vector};
use sublorentz_core::verify::{run_suite, Suite};

use crate::export::{self, CLOUD_COLUMNS, TRAJECTORY_COLUMNS};
use crate::scenario::{self, Scenario};
use crate::svg::Plot;
use crate::{CloudArgs, Command, IntegrateArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    VerifyFailed(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<sublorentz_core::Error> for CliError {
    fn from(e: sublorentz_core::Error) -> Self {
        match e {
            sublorentz_core::Error::Divergence { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Integrate(args) => cmd_integrate(&args),
        Command::Sphere(args) => cmd_cloud(&args, false),
        Command::Wavefront(args) => cmd_cloud(&args, true),
        Command::Verify { suite } => cmd_verify(&suite),
        Command::Analyze { scenario, set } => cmd_analyze(&scenario, &set),
    }
}

fn load_scenario(path: &Path, set: &[String]) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    scenario::load(&text, set).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn svg_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}_{suffix}.svg"))
}

fn write_projections(out: &Path, title: &str, lines: &[Vec<[f64; 3]>]) -> Result<(), CliError> {
    for (suffix, y, y_label) in [("x2x3", 1, "x3"), ("x2x4", 2, "x4")] {
        let plot = Plot {
            title,
            x_label: "x2",
            y_label,
            lines: lines.iter().map(|l| l.iter().map(|p| (p[0], p[y])).collect()).collect(),
        };
        let path = svg_path(out, suffix);
        export::write_atomic(&path, &plot.render()).map_err(|e| io_error(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_integrate(args: &IntegrateArgs) -> Result<(), CliError> {
    let sc = load_scenario(&args.scenario, &args.set)?;
    let dist = sc.distribution();
    let traj = integrate(&dist, &sc.particle, &sc.initial, &sc.integrator)?;
    let rows = export::trajectory_rows(&traj);

    let mut meta = Map::new();
    meta.insert("kind".into(), json!("trajectory"));
    meta.insert("scenario".into(), json!(args.scenario.display().to_string()));
    meta.insert("mass".into(), json!(sc.particle.mass()));
    meta.insert("charge".into(), json!(sc.particle.charge()));
    meta.insert("step".into(), json!(sc.integrator.step));
    meta.insert("t_end".into(), json!(sc.integrator.t_end));
    meta.insert("record_every".into(), json!(sc.integrator.record_every));
    let text = export::render(args.format, &TRAJECTORY_COLUMNS, meta, &rows);
    export::write_atomic(&args.out, &text).map_err(|e| io_error(&args.out, e))?;

    if args.svg {
        let line: Vec<[f64; 3]> = rows.iter().map(|r| [r[3], r[4], r[5]]).collect();
        write_projections(&args.out, "trajectory", &[line])?;
    }

    let last = traj.last();
    let x = last.state.position.to_array();
    let u = last.state.velocity;
    println!("wrote {} ({} samples)", args.out.display(), rows.len());
    println!("t_end                 {}", export::fmt_number(last.t));
    println!(
        "final x               ({})",
        x.iter().map(|v| export::fmt_number(*v)).collect::<Vec<_>>().join(", ")
    );
    println!(
        "final u               ({})",
        u.iter().map(|v| export::fmt_number(*v)).collect::<Vec<_>>().join(", ")
    );
    println!("max pseudonorm drift  {:.3e}", traj.max_pseudonorm_drift());
    println!("max horiz defect      {:.3e}", traj.max_horizontality_defect());
    Ok(())
}

fn cloud_meta(spec: &SphereSpec, cloud: &PointCloud) -> Map<String, Value> {
    let mut meta = Map::new();
    meta.insert("kind".into(), json!(cloud.kind.as_str()));
    meta.insert("s".into(), json!(spec.radius_s));
    meta.insert("phi".into(), json!(spec.phi));
    meta.insert("p_min".into(), json!(spec.p_min));
    meta.insert("p_max".into(), json!(spec.p_max));
    meta.insert("alpha_count".into(), json!(spec.alpha_count));
    meta.insert("p_count".into(), json!(spec.p_count));
    meta
}

fn cmd_cloud(args: &CloudArgs, wavefront: bool) -> Result<(), CliError> {
    let (default_min, default_max) = if wavefront { (PI, 8.0 * PI) } else { (0.0, 2.0 * PI) };
    let spec = SphereSpec {
        radius_s: args.s,
        alpha_count: args.grid.0,
        p_count: args.grid.1,
        p_min: args.p_min.unwrap_or(default_min),
        p_max: args.p_max.unwrap_or(default_max),
        phi: args.phi,
    };
    let cloud = if wavefront { wavefront_sample(&spec)? } else { sphere_sample(&spec)? };
    let rows = export::cloud_rows(&cloud);
    let text = export::render(args.format, &CLOUD_COLUMNS, cloud_meta(&spec, &cloud), &rows);
    export::write_atomic(&args.out, &text).map_err(|e| io_error(&args.out, e))?;
    println!("wrote {} ({} points)", args.out.display(), rows.len());

    if args.svg {
        // one polyline per α row, running along p
        let lines: Vec<Vec<[f64; 3]>> = rows
            .chunks(spec.p_count)
            .map(|row| row.iter().map(|r| [r[0], r[1], r[2]]).collect())
            .collect();
        write_projections(&args.out, cloud.kind.as_str(), &lines)?;
    }
    Ok(())
}

fn cmd_verify(suite: &str) -> Result<(), CliError> {
    let suite: Suite = suite.parse().map_err(|e: sublorentz_core::Error| CliError::Input(e.to_string()))?;
    let checks = run_suite(suite)?;
    let width = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
    println!("{:<13} {:<width$}  {:>12}  {:<18} result", "suite", "check", "measured", "threshold");
    for c in &checks {
        println!(
            "{:<13} {:<width$}  {:>12.4e}  {:<18} {}",
            c.suite.as_str(),
            c.name,
            c.measured,
            c.bound.to_string(),
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {} measured {:e}, required {}", c.suite.as_str(), c.name, c.measured, c.bound))
        .collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        Err(CliError::VerifyFailed(format!("{} check(s) failed:\n  {}", failed.len(), failed.join("\n  "))))
    }
}

fn fmt_vec(v: impl IntoIterator<Item = impl std::fmt::Display>) -> String {
    format!("({})", v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

fn cmd_analyze(path: &Path, set: &[String]) -> Result<(), CliError> {
    let sc = load_scenario(path, set)?;
    let dist = sc.distribution();
    let x = sc.initial.base();
    let f = faraday(&dist.potential, x)?;
    let kernel = abnormal_kernel(&f);
    let gv = growth_vector(&dist.potential, x)?;
    let phi = box_exponents(&gv);

    println!("point           {}", fmt_vec(x.to_array()));
    println!("F               {}", fmt_vec((0..4).map(|j| fmt_vec((0..4).map(|k| f.get(j, k))))));
    println!("E               {}", fmt_vec(f.electric()));
    println!("H               {}", fmt_vec(f.magnetic()));
    println!("det F           {:e}", f.determinant());
    println!("rank F          {}", kernel.rank_f);
    println!("singular values {}", fmt_vec(kernel.singular_values.iter().map(|s| format!("{s:e}"))));
    if kernel.basis.is_empty() {
        println!("kernel          {{}}");
    } else {
        let basis: Vec<String> = kernel.basis.iter().map(|v| fmt_vec(v.iter().map(|c| format!("{c:.6}")))).collect();
        println!("kernel          span{{{}}}", basis.join(", "));
    }
    println!("growth vector   {}", fmt_vec(&gv.dims));
    println!("degree          {}", gv.degree);
    println!("box exponents   {}", fmt_vec(&phi.phi));
    Ok(())
}
