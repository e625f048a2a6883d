//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criterion 7 is a known failure (see the project notes); it is reported as
//! FAIL but does not fail the run. Any other failure does.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use serde_json::Value;
use simplex_cli::{run, Cli};
use simplex_core::exponents::q;
use simplex_core::inequalities::{t_l1_region_contains, t_l1_region_polygon, ExponentPoint2};

const KNOWN_FAILURES: &[usize] = &[7];

struct Run {
    pass: bool,
    lines: Vec<String>,
    report: Value,
    elapsed: Duration,
}

fn exec(out: &Path, args: &[&str]) -> Result<Run, String> {
    let argv: Vec<String> = ["simplex-avg", "--out", out.to_str().unwrap()]
        .iter()
        .chain(args)
        .map(|s| s.to_string())
        .collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let v = run(&cli).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let text = fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?;
    let report: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(Run {
        pass: v.pass,
        lines: v.lines,
        report,
        elapsed,
    })
}

fn results(r: &Run) -> &Value {
    &r.report["body"]["results"]
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

type Outcome = Result<(bool, String), String>;

fn pushforward(dir: &Path, d: usize) -> Outcome {
    let r = exec(dir, &["pushforward-check", "--d", &d.to_string(), "--samples", "1000000", "--bins", "40"])?;
    let res = results(&r);
    let fit = &res["fit"];
    let (sup, p) = (f(&fit["sup_deviation"]), f(&fit["p_value"]));
    let bins = fs::read_to_string(dir.join("data/histogram.csv")).map_err(|e| e.to_string())?;
    let rows = bins.lines().filter(|l| !l.starts_with('#')).count() - 1;
    let noted = res["support_note"].as_str().is_some_and(|s| s.contains("sqrt(2)"));
    let secs = r.elapsed.as_secs_f64();
    if d == 2 {
        let pass = rows == 40 && sup < 0.01 && p > 0.001 && secs < 60.0 && noted;
        Ok((
            pass,
            format!("{rows} bins on [0, {:.6}], sup deviation {sup:.5}, p = {p:.4}, {secs:.1} s, support note recorded: {noted}", f(&res["support"])),
        ))
    } else {
        Ok((rows == 40 && p > 0.001, format!("{rows} bins, p = {p:.4} (sup deviation {sup:.5})")))
    }
}

fn l1(dir: &Path) -> Outcome {
    let r = exec(dir, &["l1-identity", "--d", "2", "--e-radius", "1", "--f-radius", "3", "--h", "1/64"])?;
    let res = results(&r);
    Ok((
        r.pass,
        format!(
            "mass {:.6} ± {:.1e}, pairing {:.6} ± {:.1e}, z = {:.2}, pairing vs pi {:.2e}",
            f(&res["operator_mass"]["value"]),
            f(&res["operator_mass"]["stderr"]),
            f(&res["pairing"]["value"]),
            f(&res["pairing"]["stderr"]),
            f(&res["z"]),
            f(&res["relative_error"])
        ),
    ))
}

fn majorize(dir: &Path) -> Result<Run, String> {
    exec(dir, &["majorize-check", "--dims", "2,3", "--inputs", "100", "--points", "100"])
}

fn cauchy_schwarz(r: &Run) -> Outcome {
    let cs = results(r)["cauchy_schwarz"].as_array().cloned().unwrap_or_default();
    let points: u64 = cs.iter().map(|s| s["points"].as_u64().unwrap_or(0)).sum();
    let violations: u64 = cs.iter().map(|s| s["violations"].as_u64().unwrap_or(u64::MAX)).sum();
    Ok((cs.len() == 2 && violations == 0, format!("{points} points over d = 2, 3, {violations} violations")))
}

fn stability(r: &Run) -> Outcome {
    let s = &results(r)["stability"];
    Ok((
        s["pass"].as_bool() == Some(true),
        format!(
            "sup lhs/rhs {:.4} -> {:.4}, change {:.2}%",
            f(&s["sup_ratio"][0]),
            f(&s["sup_ratio"][1]),
            100.0 * f(&s["relative_change"])
        ),
    ))
}

fn ratio_line(report: &Value, secs: Option<f64>) -> (bool, String) {
    let slope = &report["slope"];
    let kinds: std::collections::BTreeSet<&str> =
        report["ratios"].as_array().into_iter().flatten().filter_map(|p| p["kind"].as_str()).collect();
    let mut text = format!(
        "{} members ({}), slope {:.3} ± {:.3}, max ratio {:.4}",
        report["ratios"].as_array().map_or(0, Vec::len),
        kinds.into_iter().collect::<Vec<_>>().join(", "),
        f(&slope["slope"]),
        f(&slope["slope_half_width"]),
        f(&report["max_ratio"])
    );
    if let Some(s) = secs {
        text.push_str(&format!(", family evaluated in {s:.0} s"));
    }
    (report["pass"].as_bool() == Some(true), text)
}

fn region(dir: &Path) -> Outcome {
    let d = 2i64;
    let hull = q(d, d + 1);
    let eps = q(1, 1000);
    let pt = |x, y| ExponentPoint2::new(x, y).unwrap();
    let inside = [pt(q(0, 1), q(1, 1)), pt(q(1, 1), q(0, 1)), pt(hull, hull), pt(q(1, 2), q(1, 2))];
    let outside = [pt(q(0, 1), q(0, 1)), pt(hull + eps, hull + eps)];
    let mut ok = inside.iter().all(|p| t_l1_region_contains(2, p)) && !outside.iter().any(|p| t_l1_region_contains(2, p));
    let probes: Vec<ExponentPoint2> = (0..=12)
        .flat_map(|i| (0..=12).map(move |j| (i, j)))
        .map(|(i, j)| pt(q(i, 12), q(j, 12)))
        .collect();
    let symmetric = probes
        .iter()
        .all(|p| t_l1_region_contains(2, p) == t_l1_region_contains(2, &p.swapped()));
    let polygon = t_l1_region_polygon(2);
    let corners: Vec<(String, String)> = polygon.iter().map(|p| (p.x.to_string(), p.y.to_string())).collect();
    let mut distinct = corners.clone();
    distinct.sort();
    distinct.dedup();
    let expected = vec![
        ("0".to_string(), "1".to_string()),
        ("1".to_string(), "0".to_string()),
        ("2/3".to_string(), "2/3".to_string()),
    ];
    let triangle = distinct == expected;
    let r = exec(dir, &["region", "--d", "2", "--point", "2/3,2/3"])?;
    let printed = r.lines == ["inside"];
    ok &= symmetric && triangle && printed;
    Ok((
        ok,
        format!(
            "6 reference points classified, symmetric on a 13x13 rational grid: {symmetric}, polygon {}, `region --point 2/3,2/3` prints {:?}",
            corners.iter().map(|(x, y)| format!("({x},{y})")).collect::<Vec<_>>().join(" "),
            r.lines.join(" ")
        ),
    ))
}

fn cube(dir: &Path) -> Outcome {
    let r = exec(dir, &["cube-bound", "--d", "2", "--p", "3/2", "--q", "3/2", "--r", "3/4", "--s", "3/4", "--pairs", "20", "--fit-pairs", "5"])?;
    let res = results(&r);
    Ok((
        r.pass,
        format!(
            "C = {:.4} fitted on 5 pairs, worst held-out measured/(C·bound) = {:.4} over 15 pairs",
            f(&res["constant"]),
            f(&res["worst_excess"])
        ),
    ))
}

fn adjoint(dir: &Path) -> Outcome {
    let r = exec(dir, &["adjoint-check", "--d", "2", "--trials", "50"])?;
    let res = results(&r);
    Ok((
        r.pass,
        format!(
            "50 triples, {} failures, worst residual {:.2} stderr",
            res["failures"],
            f(&res["worst_residual_in_stderr"])
        ),
    ))
}

fn frames(dir: &Path) -> Outcome {
    let r = exec(dir, &["frames-check", "--dims", "2,3", "--trials", "1000"])?;
    Ok((r.pass, r.lines[..r.lines.len() - 1].join("; ")))
}

fn substrate(dir: &Path) -> Outcome {
    let haar = exec(&dir.join("haar"), &["haar-test", "--samples", "100000", "--sigma", "3"])?;
    let gram = exec(&dir.join("gram"), &["simplex-check", "--d-max", "8"])?;
    let tests = haar.lines.len() - 1;
    let worst = haar
        .lines
        .iter()
        .filter_map(|l| l.split("(z = ").nth(1))
        .filter_map(|s| s.split(')').next()?.parse::<f64>().ok())
        .fold(0.0, f64::max);
    Ok((
        haar.pass && gram.pass,
        format!("{tests} moment tests, largest |z| {worst:.2}; {}", gram.lines[0].trim_end_matches(" PASS").trim_end_matches(" FAIL")),
    ))
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for sub in ["", "data"] {
        for entry in fs::read_dir(dir.join(sub)).unwrap() {
            let p = entry.unwrap().path();
            if p.is_file() {
                let name = p.strip_prefix(dir).unwrap().display().to_string();
                files.insert(name, fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn determinism(dir: &Path) -> Outcome {
    let mut snaps = Vec::new();
    for threads in ["1", "4", "8"] {
        let out = dir.join(format!("t{threads}"));
        exec(
            &out,
            &[
                "verify-ratios", "--threads", threads, "--op", "T", "--d", "2", "--exponents", "1,1,1", "--exponents",
                "3/2,3/2,1", "--family", "mixed", "--members", "8", "--delta-min", "0.05", "--delta-max", "0.5",
                "--h", "1/32", "--samples", "2048", "--seed", "7",
            ],
        )?;
        snaps.push(snapshot(&out));
    }
    let same = snaps.windows(2).all(|w| w[0] == w[1]);
    let csvs = snaps[0].keys().filter(|k| k.ends_with(".csv")).count();
    Ok((same && csvs > 0, format!("{} files ({csvs} CSV) byte-identical at 1, 4 and 8 workers: {same}", snaps[0].len())))
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temporary directory");
    let dir = |name: &str| root.path().join(name);
    let mut outcomes: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, title: &'static str, o: Outcome| {
        let line = match &o {
            Ok((true, detail)) => format!("criterion {n:>2} PASS  {title}: {detail}"),
            Ok((false, detail)) if KNOWN_FAILURES.contains(&n) => {
                format!("criterion {n:>2} FAIL (expected, see notes)  {title}: {detail}")
            }
            Ok((false, detail)) => format!("criterion {n:>2} FAIL  {title}: {detail}"),
            Err(e) => format!("criterion {n:>2} FAIL  {title}: error: {e}"),
        };
        println!("{line}");
        outcomes.push((n, title, o));
    };

    report(1, "pushforward density, d = 2", pushforward(&dir("c1"), 2));
    report(2, "pushforward density, d = 3", pushforward(&dir("c2"), 3));
    report(3, "L^1 identity", l1(&dir("c3")));
    let maj = majorize(&dir("c45"));
    report(4, "Cauchy-Schwarz majorization", maj.as_ref().map_err(Clone::clone).and_then(cauchy_schwarz));
    report(5, "majorization constant stability", maj.as_ref().map_err(Clone::clone).and_then(stability));

    let family = exec(
        &dir("c67"),
        &[
            "verify-ratios", "--op", "T", "--d", "2", "--exponents", "2,2,2", "--exponents", "3,3,3", "--family",
            "mixed", "--members", "30", "--delta-min", "0.02", "--delta-max", "1", "--h", "1/64", "--samples", "4096",
            "--expect", "bounded", "--slope-tol", "0.15",
        ],
    );
    match &family {
        Ok(r) => {
            let secs = r.elapsed.as_secs_f64();
            let reports = results(r).as_array().cloned().unwrap_or_default();
            let c6 = reports.first().map(|x| ratio_line(x, Some(secs)));
            let c7 = reports.get(1).map(|x| ratio_line(x, None));
            report(
                6,
                "restricted strong type (2,2;2)",
                c6.map(|(p, t)| (p && secs < 600.0, t)).ok_or_else(|| "missing report".into()),
            );
            report(7, "restricted strong type (3,3;3)", c7.ok_or_else(|| "missing report".into()));
        }
        Err(e) => {
            report(6, "restricted strong type (2,2;2)", Err(e.clone()));
            report(7, "restricted strong type (3,3;3)", Err(e.clone()));
        }
    }

    report(
        8,
        "unboundedness of (1,1;1) on twin balls",
        exec(
            &dir("c8"),
            &[
                "verify-ratios", "--op", "T", "--d", "2", "--exponents", "1,1,1", "--family", "twin-balls",
                "--members", "10", "--delta-min", "0.02", "--delta-max", "0.2", "--expect", "unbounded",
                "--max-slope", "-0.8",
            ],
        )
        .map(|r| {
            let x = &results(&r)[0];
            let (p, t) = ratio_line(x, None);
            (p && r.pass, t)
        }),
    );
    report(9, "L^1 region geometry", region(&dir("c9")));
    report(10, "cube decomposition", cube(&dir("c10")));
    report(11, "adjoint identity", adjoint(&dir("c11")));
    report(12, "frame selection", frames(&dir("c12")));
    report(13, "Haar and simplex substrate", substrate(&dir("c13")));
    report(14, "determinism across worker counts", determinism(&dir("c14")));

    let unexpected: Vec<usize> = outcomes
        .iter()
        .filter(|(n, _, o)| !matches!(o, Ok((true, _))) && !KNOWN_FAILURES.contains(n))
        .map(|(n, _, _)| *n)
        .collect();
    let passed = outcomes.iter().filter(|(_, _, o)| matches!(o, Ok((true, _)))).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
