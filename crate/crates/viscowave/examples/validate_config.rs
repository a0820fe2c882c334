//! Structural-assumption validation: one finding per assumption, with
//! warnings (not failures) for destabilized settings under
//! allow_unstable. Shows the shipped baseline, the destabilized config,
//! and a deliberately broken one.

use std::path::Path;
use viscowave::config::{from_toml_str, validate};

fn main() {
    let cases = [
        ("configs/c1.toml (stable baseline)", include_str!("../configs/c1.toml")),
        (
            "configs/unstable_delay.toml (margin violated, allow_unstable)",
            include_str!("../configs/unstable_delay.toml"),
        ),
        (
            "broken: saturated kernel and reversed delay window",
            "[kernel_u]\nfamily = \"exp\"\na = 2.0\nb = 1.0\n\
             [delay_u]\nmu = 0.25\ntau1 = 1.0\ntau2 = 0.5\n",
        ),
    ];
    for (title, text) in cases {
        let spec = from_toml_str(text, Path::new(".")).expect("parses");
        let report = validate(&spec);
        println!("== {title}");
        print!("{report}");
        println!(
            "=> {}\n",
            if report.passed() {
                if report.has_warnings() {
                    "accepted with warnings"
                } else {
                    "accepted"
                }
            } else {
                "rejected"
            }
        );
    }
}
