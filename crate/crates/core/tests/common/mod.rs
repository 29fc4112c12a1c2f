#![allow(dead_code)]

use pldpch::protograph::Protomatrix;

/// Loads one of the bundled protomatrices shipped with the command-line crate.
pub fn bundled(name: &str) -> Protomatrix {
    let path = format!("{}/../cli/data/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    let mut lines = text.lines();
    let head: Vec<usize> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    let rows: Vec<Vec<u32>> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), head[0]);
    Protomatrix::from_rows(&rows).unwrap()
}

pub fn r4() -> Protomatrix {
    bundled("b7x11_r4")
}

pub fn r5() -> Protomatrix {
    bundled("b6x10_r5")
}

pub fn r8() -> Protomatrix {
    bundled("b5x15_r8")
}

pub fn r10() -> Protomatrix {
    bundled("b6x24_r10")
}
