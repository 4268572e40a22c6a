//! Subcommand implementations. Exit-code contract: 0 on success, 1 on
//! domain or solver failures, 2 on usage and parse failures.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use kirchhoff_core::functionals;
use kirchhoff_core::groundstate::{find_ground_state, LocalProblem};
use kirchhoff_core::kirchhoff_coeff::{validate_m, KirchhoffCoeff};
use kirchhoff_core::moser2d;
use kirchhoff_core::nonlinearity::{validate_growth, NonlinearitySpec};
use kirchhoff_core::rescaling;
use kirchhoff_core::semiclassical::{concentration_diagnostics, continuation_sweep};

use crate::config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub eps_override: Option<Vec<f64>>,
}

impl Ctx {
    fn build(&self) -> Result<(NonlinearitySpec, KirchhoffCoeff, LocalProblem), String> {
        let spec = self
            .config
            .problem
            .nonlinearity
            .build()
            .map_err(|e| e.to_string())?;
        let coeff = self.config.problem.coeff.build().map_err(|e| e.to_string())?;
        let prob =
            LocalProblem::new(spec.clone(), self.config.problem.m).map_err(|e| e.to_string())?;
        Ok((spec, coeff, prob))
    }

    fn write_file(&self, name: &str, contents: &[u8]) -> Result<PathBuf, String> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| e.to_string())?;
        }
        fs::write(&path, contents).map_err(|e| e.to_string())?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, String> {
        let mut body = serde_json::to_vec_pretty(value).map_err(|e| e.to_string())?;
        body.push(b'\n');
        self.write_file(name, &body)
    }
}

fn fail(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_DOMAIN
}

pub fn cmd_validate(ctx: &Ctx) -> i32 {
    let (spec, coeff, _) = match ctx.build() {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let growth = match validate_growth(&spec, ctx.config.problem.m) {
        Ok(g) => g,
        Err(e) => return fail(&e.to_string()),
    };
    let coeff_report = match validate_m(&coeff, spec.dimension()) {
        Ok(r) => r,
        Err(e) => return fail(&e.to_string()),
    };
    let all_pass = growth.passes_all() && coeff_report.all_pass();
    let report = json!({
        "config": ctx.config,
        "growth": growth,
        "coefficient": coeff_report,
        "all_pass": all_pass,
        "failed_coefficient_hypotheses": coeff_report.failed(),
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    let _ = ctx.write_json("validate.json", &report);
    if all_pass {
        EXIT_OK
    } else {
        EXIT_DOMAIN
    }
}

pub fn cmd_groundstate(ctx: &Ctx) -> i32 {
    let (spec, coeff, prob) = match ctx.build() {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    match validate_growth(&spec, ctx.config.problem.m) {
        Ok(g) if g.passes_all() => {}
        Ok(_) => return fail("growth hypotheses fail for the configured nonlinearity"),
        Err(e) => return fail(&e.to_string()),
    }
    let shoot_cfg = ctx.config.numerics.shoot_config();
    let gs = match find_ground_state(&prob, &shoot_cfg) {
        Ok(g) => g,
        Err(e) => return fail(&format!("ground-state solve failed: {e}")),
    };
    let lifted = match rescaling::lift(&gs, &prob, &coeff, &shoot_cfg.grid) {
        Ok(l) => l,
        Err(e) => return fail(&format!("lift failed: {e}")),
    };
    let report = match functionals::energy_report(&gs, &prob, &coeff, Some(&lifted.v)) {
        Ok(r) => r,
        Err(e) => return fail(&format!("energy report failed: {e}")),
    };

    let mut local_csv = Vec::new();
    if gs.profile.write_csv(&mut local_csv).is_err() {
        return fail("could not serialize the local profile");
    }
    let mut lifted_csv = Vec::new();
    if lifted.v.write_csv(&mut lifted_csv).is_err() {
        return fail("could not serialize the lifted profile");
    }
    let summary = json!({
        "config": ctx.config,
        "local": {
            "shoot_height": gs.shoot_height,
            "energy": gs.energy,
            "grad_sq": gs.norms.grad_sq,
            "mass_sq": gs.norms.mass_sq,
            "sup_norm": gs.norms.sup_norm,
            "pohozaev_residual": gs.pohozaev_residual,
            "solver": gs.solver,
            "brackets": gs.brackets,
            "tail": gs.profile.tail(),
        },
        "kirchhoff": {
            "t_u": lifted.t_u,
            "h_v": lifted.h_v,
            "kirchhoff_residual": lifted.kirchhoff_residual,
            "energy_identity_residual": lifted.energy_identity_residual,
        },
        "energy_report": report,
    });
    for (name, body) in [("profile.csv", local_csv), ("kirchhoff_profile.csv", lifted_csv)] {
        if let Err(e) = ctx.write_file(name, &body) {
            return fail(&e);
        }
    }
    if let Err(e) = ctx.write_json("summary.json", &summary) {
        return fail(&e);
    }
    println!(
        "ground state: u(0) = {:.6}, energy = {:.6}, pohozaev residual = {:.3e}, existence margin = {:.6}",
        gs.shoot_height, gs.energy, gs.pohozaev_residual, report.existence_margin
    );
    EXIT_OK
}

pub fn cmd_lift(ctx: &Ctx) -> i32 {
    let (_, coeff, prob) = match ctx.build() {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let shoot_cfg = ctx.config.numerics.shoot_config();
    let gs = match find_ground_state(&prob, &shoot_cfg) {
        Ok(g) => g,
        Err(e) => return fail(&format!("ground-state solve failed: {e}")),
    };
    let lifted = match rescaling::lift(&gs, &prob, &coeff, &shoot_cfg.grid) {
        Ok(l) => l,
        Err(e) => return fail(&format!("lift failed: {e}")),
    };
    let mut local_csv = Vec::new();
    let mut lifted_csv = Vec::new();
    if gs.profile.write_csv(&mut local_csv).is_err()
        || lifted.v.write_csv(&mut lifted_csv).is_err()
    {
        return fail("could not serialize profiles");
    }
    let summary = json!({
        "config": ctx.config,
        "t_u": lifted.t_u,
        "h_v": lifted.h_v,
        "kirchhoff_residual": lifted.kirchhoff_residual,
        "energy_identity_residual": lifted.energy_identity_residual,
    });
    for (name, body) in [("local_profile.csv", local_csv), ("kirchhoff_profile.csv", lifted_csv)] {
        if let Err(e) = ctx.write_file(name, &body) {
            return fail(&e);
        }
    }
    if let Err(e) = ctx.write_json("lift.json", &summary) {
        return fail(&e);
    }
    println!(
        "lift: t_u = {:.9}, h_v = {:.9}, kirchhoff residual = {:.3e}",
        lifted.t_u, lifted.h_v, lifted.kirchhoff_residual
    );
    EXIT_OK
}

pub fn cmd_moser(ctx: &Ctx) -> i32 {
    let (spec, _, _) = match ctx.build() {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    if spec.dimension() != 2 {
        return fail("the criticality scan is a two-dimensional construction; configure N = 2");
    }
    let scan = match moser2d::criticality_scan(&spec, ctx.config.problem.m, ctx.config.moser.n_max)
    {
        Ok(s) => s,
        Err(e) => return fail(&format!("scan failed: {e}")),
    };
    let mut csv = String::from("n,t_star,max_value,mass_log_n\n");
    for row in &scan.rows {
        csv.push_str(&format!(
            "{},{:e},{:e},{:e}\n",
            row.n, row.t_star, row.max_value, row.mass_log_n
        ));
    }
    if let Err(e) = ctx.write_file("moser_scan.csv", csv.as_bytes()) {
        return fail(&e);
    }
    match scan.found {
        Some(n) => println!(
            "criticality certified: max_t energy(t·w_n) < 1/2 at n = {n} (support radius {:.6})",
            scan.r
        ),
        None => println!(
            "no index up to {} pushed the ray maximum below 1/2; level not certified at this cap",
            ctx.config.moser.n_max
        ),
    }
    EXIT_OK
}

pub fn cmd_semiclassical(ctx: &Ctx) -> i32 {
    let (spec, coeff, _) = match ctx.build() {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let pot = match ctx.config.potential_spec() {
        None => {
            eprintln!("error: the semiclassical sweep needs `problem.potential` in the config");
            return EXIT_USAGE;
        }
        Some(Err(e)) => return fail(&e),
        Some(Ok(p)) => p,
    };
    let eps_list = ctx
        .eps_override
        .clone()
        .or_else(|| ctx.config.eps_list.clone())
        .unwrap_or_else(|| vec![0.5, 0.2, 0.1, 0.05]);
    let shoot_cfg = ctx.config.numerics.shoot_config();
    let sweep = match continuation_sweep(&pot, &spec, &coeff, &eps_list, &shoot_cfg) {
        Ok(s) => s,
        Err(e) => return fail(&format!("sweep failed before the first solve: {e}")),
    };
    let table = concentration_diagnostics(&sweep.results, &sweep.limit_profile);

    let mut csv = String::from("eps,x_eps_dist,sup_dist,h1_dist,spike,coeff,decay_C,decay_c\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            row.eps,
            row.x_eps_dist,
            row.sup_dist,
            row.h1_dist,
            row.spike_height,
            row.coefficient,
            row.decay_amp,
            row.decay_rate
        ));
    }
    if let Err(e) = ctx.write_file("sweep.csv", csv.as_bytes()) {
        return fail(&e);
    }
    for (i, res) in sweep.results.iter().enumerate() {
        let mut body = Vec::new();
        if res.profile.write_csv(&mut body).is_err() {
            return fail("could not serialize a sweep profile");
        }
        let name = format!("profiles/eps_{i:02}.csv");
        if let Err(e) = ctx.write_file(&name, &body) {
            return fail(&e);
        }
    }
    let summary = json!({
        "config": ctx.config,
        "eps_list": eps_list,
        "diagnostics": table,
        "limit": {
            "energy": sweep.local.energy,
            "shoot_height": sweep.local.shoot_height,
            "pohozaev_residual": sweep.local.pohozaev_residual,
        },
    });
    if let Err(e) = ctx.write_json("sweep_summary.json", &summary) {
        return fail(&e);
    }

    let mut out = std::io::stdout();
    let _ = writeln!(
        out,
        "sweep rows: {} (h1 decreasing: {}, sup decreasing: {})",
        table.rows.len(),
        table.h1_dist_decreasing,
        table.sup_dist_decreasing
    );
    if let Some((eps, err)) = &sweep.failure {
        eprintln!("error: sweep stopped at eps = {eps}: {err}");
        return EXIT_DOMAIN;
    }
    EXIT_OK
}
