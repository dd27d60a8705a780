#![no_main]

use libfuzzer_sys::fuzz_target;
use luminal::io::{parse_report, write_report};

fn render(report: &luminal::io::ReportFile) -> String {
    let mut buf = Vec::new();
    write_report(&mut buf, &report.checks, &report.scalars).unwrap();
    String::from_utf8(buf).unwrap()
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = parse_report(text) {
        let once = render(&report);
        assert_eq!(once, render(&parse_report(&once).unwrap()));
    }
});
