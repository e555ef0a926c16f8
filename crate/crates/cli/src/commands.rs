//! The pipelines behind each subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use maxshape::audit::{
    ahlfors_profile, builtin_fixtures, geometric_radii, summarize, write_profiles_csv, AhlforsOptions, AhlforsSummary,
    DensityProfile,
};
use maxshape::battery::{run_battery, BatteryOptions};
use maxshape::functionals::{evaluate as eval_functional, SetFunctional};
use maxshape::geometry::{total_length, CurveNetwork, DomainSpec, Point2};
use maxshape::grid::{distance_transform, rasterize, OpenRegion};
use maxshape::optimizer::{minimize, minimizer_profiles, OptResult, TraceRecord};
use maxshape::pde::{eigenmodes, solve_torsion, Coefficients, PdeOptions};
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::{svg, CliError, Outcome};

/// Where files go and whether progress is printed.
pub struct Sink {
    pub dir: PathBuf,
    pub quiet: bool,
}

impl Sink {
    fn new(dir: &Path, quiet: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
        Ok(Self { dir: dir.to_path_buf(), quiet })
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(path.clone(), e))?;
        self.say(format!("wrote {}", path.display()));
        Ok(path)
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(CliError::Serialize)?;
        s.push('\n');
        self.write(name, s)
    }

    fn profiles_csv(&self, name: &str, profiles: &[DensityProfile]) -> Result<PathBuf, CliError> {
        let mut buf = Vec::new();
        write_profiles_csv(profiles, &mut buf).map_err(|e| CliError::Io(self.dir.join(name), e))?;
        self.write(name, buf)
    }
}

pub fn run(cfg: &RunConfig, command: Command, quiet: bool) -> Result<Outcome, CliError> {
    let sink = Sink::new(&cfg.output_dir, quiet)?;
    match command {
        Command::Solve => solve(cfg, &sink),
        Command::Evaluate => evaluate(cfg, &sink),
        Command::Audit => audit(cfg, &sink),
        Command::Properties => properties(cfg, &sink),
        Command::Fixtures => fixtures(cfg, &sink),
    }
}

fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::from("iteration,kind,candidate_value,accepted,current_value,best_value,length,temperature\n");
    for t in trace {
        let kind = t
            .kind
            .and_then(|k| serde_json::to_value(k).ok())
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{kind},{},{},{},{},{},{}\n",
            t.iteration, t.candidate_value, t.accepted, t.current_value, t.best_value, t.length, t.temperature
        ));
    }
    s
}

/// The nodal field worth looking at for `f`: distance to ∂Ω ∪ Σ for the
/// inradius, |u₁| for spectral functionals, the torsion function otherwise.
fn field(
    f: &SetFunctional,
    region: &OpenRegion<f64>,
    coeff: &Coefficients<f64>,
    pde: &PdeOptions,
) -> Result<Vec<f64>, CliError> {
    let grid = region.grid();
    Ok(match f {
        SetFunctional::Inradius => distance_transform(grid)?.values().to_vec(),
        SetFunctional::Eigenvalue { .. } | SetFunctional::SpectralComposite { .. } => {
            let m = eigenmodes(region, coeff, 1, pde)?;
            m.modes[0].iter().map(|v| v.abs()).collect()
        }
        _ => solve_torsion(region, pde)?.w,
    })
}

fn render_network(
    sink: &Sink,
    domain: &DomainSpec<f64>,
    net: &CurveNetwork<f64>,
    f: &SetFunctional,
    h: f64,
    coeff: &Coefficients<f64>,
    pde: &PdeOptions,
) -> Result<(), CliError> {
    let grid = Arc::new(rasterize(domain, Some(net), h)?);
    let region = OpenRegion::new(grid.clone());
    let values = field(f, &region, coeff, pde)?;
    sink.write("field.svg", svg::heat_map(&grid, &values, Some(net)))?;
    Ok(())
}

fn solve(cfg: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let domain = cfg.domain()?;
    let opt = cfg.optimizer()?;
    sink.say(format!(
        "solving {} at L = {} with h = {}, {} generations, seed {}",
        opt.functional.name(),
        opt.length,
        opt.grid_h,
        opt.schedule.iterations,
        opt.seed
    ));
    let res = minimize(&domain, opt)?;
    sink.say(format!("initial {:.6e} -> best {:.6e}", res.initial_value, res.best_value));
    sink.json("result.json", &res)?;
    sink.write("trace.csv", trace_csv(&res.trace))?;
    let (profiles, aopts) = minimizer_profiles(&res.best, opt.grid_h, Some(res.r0));
    sink.profiles_csv("density.csv", &profiles)?;
    if cfg.render {
        sink.write("network.svg", svg::domain_figure(&domain, &[(&res.initial, "#bbbbbb"), (&res.best, "crimson")]))?;
        render_network(sink, &domain, &res.best, &opt.functional, opt.grid_h, &opt.coefficients, &opt.pde)?;
        sink.write("density.svg", svg::density_chart(&profiles, aopts.c1, aopts.c2))?;
    }
    let length_ok = (total_length(&res.best) - opt.length).abs() <= opt.length_tol;
    Ok(verdict(sink, length_ok && res.audit.pass, || describe_audit(&res)))
}

fn describe_audit(res: &OptResult) -> String {
    format!(
        "density audit: {} failures, c1_hat = {:.4}, c2_hat = {:.4}",
        res.audit.failures, res.audit.c1_hat, res.audit.c2_hat
    )
}

fn verdict(sink: &Sink, ok: bool, why: impl FnOnce() -> String) -> Outcome {
    if ok {
        Outcome::Ok
    } else {
        sink.say(format!("constraint violation: {}", why()));
        Outcome::Violation
    }
}

#[derive(Serialize)]
struct Evaluation {
    functional: String,
    value: f64,
    grid_h: f64,
    length: f64,
    free_nodes: usize,
    components: usize,
}

fn evaluate(cfg: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let domain = cfg.domain()?;
    let input = cfg.network()?;
    let net = input.network();
    let f = cfg.functional()?;
    let h = cfg.grid_h().ok_or(CliError::Missing("grid_h"))?;
    let (coeff, pde) = cfg
        .optimizer
        .as_ref()
        .map_or_else(|| (Coefficients::laplacian(), PdeOptions::default()), |o| (o.coefficients.clone(), o.pde.clone()));
    let grid = Arc::new(rasterize(&domain, Some(net), h)?);
    let region = OpenRegion::new(grid);
    let value = eval_functional(&f, &region, &coeff, &pde)?;
    sink.say(format!("{} = {value:.9e}", f.name()));
    sink.json(
        "evaluate.json",
        &Evaluation {
            functional: f.name(),
            value,
            grid_h: h,
            length: total_length(net),
            free_nodes: region.node_count(),
            components: region.components().len(),
        },
    )?;
    if cfg.render {
        sink.write("network.svg", svg::domain_figure(&domain, &[(net, "crimson")]))?;
        render_network(sink, &domain, net, &f, h, &coeff, &pde)?;
    }
    Ok(Outcome::Ok)
}

/// Audits the configured network exactly as the solver audits its result.
pub fn audit_summary(cfg: &RunConfig) -> Result<(AhlforsSummary, Vec<DensityProfile>, AhlforsOptions), CliError> {
    let input = cfg.network()?;
    let h = cfg.grid_h().unwrap_or(0.0);
    let (profiles, opts) = minimizer_profiles(input.network(), h, input.r0());
    Ok((summarize(&profiles, &opts), profiles, opts))
}

fn audit(cfg: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let (summary, profiles, opts) = audit_summary(cfg)?;
    sink.json("audit.json", &summary)?;
    sink.profiles_csv("density.csv", &profiles)?;
    if cfg.render {
        sink.write("density.svg", svg::density_chart(&profiles, opts.c1, opts.c2))?;
    }
    Ok(verdict(sink, summary.pass, || format!("{} radii outside [c1, c2] after slack", summary.failures)))
}

fn properties(cfg: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let pde = cfg.optimizer.as_ref().map(|o| o.pde.clone()).unwrap_or_default();
    sink.say("running the functional battery");
    let reports = run_battery(&pde, &BatteryOptions::default())?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    sink.say(format!("{} checks, {failed} failed", reports.len()));
    sink.json("properties.json", &reports)?;
    Ok(verdict(sink, failed == 0, || format!("{failed} property checks failed")))
}

#[derive(Serialize)]
struct FixtureSummary {
    name: String,
    length: f64,
    audit: AhlforsSummary,
}

fn padded_box(net: &CurveNetwork<f64>) -> Result<DomainSpec<f64>, CliError> {
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in net.vertices() {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let pad = 0.05 * (hi.x - lo.x).max(hi.y - lo.y).max(1e-3);
    Ok(DomainSpec::rectangle(lo - Point2::new(pad, pad), hi + Point2::new(pad, pad))?)
}

fn fixtures(cfg: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let depth = cfg.fixture_depth;
    let mut summaries = Vec::new();
    // The dyadic star only reaches density 2 + n at r = 2^-n once its tail
    // below r is present; 52 further levels are below f64 resolution.
    for fx in builtin_fixtures(depth + 52) {
        let net = &fx.network;
        let (profiles, opts) = if fx.name.starts_with("dyadic_star") {
            // The defect sits at the origin, at the dyadic radii.
            let radii: Vec<f64> = (1..=depth).map(|n| 0.5f64.powi(n as i32)).collect();
            let opts = AhlforsOptions { r0: Some(1.0), ..AhlforsOptions::default() };
            (ahlfors_profile(net, Some(&[Point2::new(0.0, 0.0)]), &radii, &opts), opts)
        } else {
            let hi = (net.diameter() / 2.0).min(0.5);
            let opts = AhlforsOptions { r0: Some(hi), ..AhlforsOptions::default() };
            (ahlfors_profile(net, None, &geometric_radii(hi, hi / 256.0, 17), &opts), opts)
        };
        sink.json(&format!("{}.json", fx.name), net)?;
        sink.profiles_csv(&format!("{}_density.csv", fx.name), &profiles)?;
        if cfg.render {
            sink.write(&format!("{}.svg", fx.name), svg::domain_figure(&padded_box(net)?, &[(net, "black")]))?;
            sink.write(&format!("{}_density.svg", fx.name), svg::density_chart(&profiles, opts.c1, opts.c2))?;
        }
        summaries.push(FixtureSummary { name: fx.name.clone(), length: total_length(net), audit: summarize(&profiles, &opts) });
    }
    sink.json("fixtures.json", &summaries)?;
    Ok(Outcome::Ok)
}
