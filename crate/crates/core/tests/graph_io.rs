use std::io::Cursor;
use std::path::Path;

use palab_core::{generate, Delta, Error, PAGraph, PAParams, Variant};

fn params(v: Variant, m: u32, d: &str) -> PAParams {
    PAParams::new(v, m, Delta::parse(d).unwrap()).unwrap()
}

fn serialized(g: &PAGraph) -> Vec<u8> {
    let mut buf = Vec::new();
    g.write_to(&mut buf).unwrap();
    buf
}

#[test]
fn save_load_is_bit_identical_for_every_variant() {
    let dir = tempfile::tempdir().unwrap();
    for (i, p) in [
        params(Variant::A, 1, "1/2"),
        params(Variant::A, 3, "-2"),
        params(Variant::B, 1, "0"),
        params(Variant::B, 2, "-1"),
        params(Variant::C, 2, "-1"),
        params(Variant::C, 4, "0.25"),
    ]
    .into_iter()
    .enumerate()
    {
        let g = generate(p, 3000, 11 + i as u64).unwrap();
        let path = dir.path().join(format!("g{i}.pa"));
        g.save(&path).unwrap();
        let h = PAGraph::load(&path).unwrap();
        assert_eq!(g, h, "{p}");
        assert_eq!(h.meta().seed, Some(11 + i as u64));
        assert_eq!(std::fs::read(&path).unwrap(), serialized(&h), "{p}");
    }
}

#[test]
fn header_lists_the_documented_keys() {
    let g = generate(params(Variant::C, 2, "-1/2"), 5, 3).unwrap();
    let text = String::from_utf8(serialized(&g)).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| l.split('=').next().unwrap())
        .collect();
    assert_eq!(keys, ["format_version", "model", "m", "delta", "t", "seed", "rng", "checksum"]);
    assert!(text.contains("# delta=-1/2\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 10);
}

fn reload(text: &str) -> Result<PAGraph, Error> {
    PAGraph::read_from(Cursor::new(text.as_bytes()), Path::new("mem"))
}

#[test]
fn corruption_is_reported() {
    let g = generate(params(Variant::B, 1, "0"), 50, 9).unwrap();
    let text = String::from_utf8(serialized(&g)).unwrap();
    assert!(reload(&text).is_ok());

    // Change one target while keeping the file well formed.
    let lines: Vec<&str> = text.lines().collect();
    let idx = lines.iter().rposition(|l| !l.starts_with('#')).unwrap();
    let mut parts: Vec<String> = lines[idx].split(' ').map(String::from).collect();
    parts[2] = if parts[2] == "1" { "2".into() } else { "1".into() };
    let mut edited: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    edited[idx] = parts.join(" ");
    let tampered = edited.join("\n") + "\n";
    assert!(matches!(reload(&tampered), Err(Error::Checksum { .. })));

    let truncated: String = text.lines().take(lines.len() - 3).map(|l| format!("{l}\n")).collect();
    assert!(reload(&truncated).is_err());

    let future = text.replace("# format_version=1", "# format_version=99");
    assert!(matches!(reload(&future), Err(Error::Version { .. })));

    let garbage = text.replacen("\n2 2 1\n", "\n2 2 x\n", 1);
    assert!(matches!(reload(&garbage), Err(Error::Parse { .. })));
}

#[test]
fn histogram_csv_counts_every_vertex() {
    let g = generate(params(Variant::C, 2, "0"), 2000, 4).unwrap();
    let mut buf = Vec::new();
    g.write_degree_histogram_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,count"));
    let (mut vertices, mut degree_sum) = (0u64, 0u64);
    for l in lines {
        let (k, c) = l.split_once(',').unwrap();
        let (k, c): (u64, u64) = (k.parse().unwrap(), c.parse().unwrap());
        vertices += c;
        degree_sum += k * c;
    }
    assert_eq!(vertices, 2000);
    assert_eq!(degree_sum, 2 * 2 * 2000);
}
