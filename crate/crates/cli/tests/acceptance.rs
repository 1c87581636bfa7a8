//! Acceptance criteria 1-14 through the `reproduce` report, one line per
//! criterion.

use std::process::ExitCode;

use nanorbit::report::CRITERIA;
use nanorbit::{reproduce, Config};

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let report = reproduce(&Config::default(), dir.path(), None).unwrap();
    print!("{}", report.render());

    let criteria = report.criteria();
    let mut ok = criteria.len() == CRITERIA as usize;
    for (c, pass, rows) in &criteria {
        let detail: Vec<String> = rows.iter().map(|r| format!("{}: {}", r.check, r.measured)).collect();
        println!("criterion {c:>2}: {} | {}", if *pass { "PASS" } else { "FAIL" }, detail.join("; "));
        ok &= *pass;
    }
    println!("runtime {:.1} s", report.runtime_s);

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let structure = report.rows.len() >= 12
        && report.rows.iter().any(|r| r.check == "T_rev target 794 us")
        && report.rows.iter().any(|r| r.check == "resumption at T_rev/4")
        && csv.starts_with("criterion,check,measured,target,tolerance,pass\n")
        && csv.lines().count() == report.rows.len() + 1
        && report.runtime_s < 300.0;
    if !structure {
        println!("report structure check failed");
    }
    if ok && structure {
        println!("acceptance: all {CRITERIA} criteria pass");
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
