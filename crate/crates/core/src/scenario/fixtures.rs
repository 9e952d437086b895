const FIXTURES: [(&str, &str); 6] = [
    ("circle-cover", include_str!("../../fixtures/circle-cover.scn")),
    ("z2-reflection", include_str!("../../fixtures/z2-reflection.scn")),
    ("single-chart", include_str!("../../fixtures/single-chart.scn")),
    ("translations-q1", include_str!("../../fixtures/translations-q1.scn")),
    ("mobius-elliptic3", include_str!("../../fixtures/mobius-elliptic3.scn")),
    ("mobius-rotations", include_str!("../../fixtures/mobius-rotations.scn")),
];

pub fn fixture_names() -> Vec<&'static str> {
    FIXTURES.iter().map(|(n, _)| *n).collect()
}

pub fn fixture_source(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
