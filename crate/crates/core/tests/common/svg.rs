//! Minimal reader for the bars of a rendered chart.

use quick_xml::events::Event;
use quick_xml::Reader;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rect {
    pub class: String,
    pub x: u64,
    pub y: u64,
    pub width: u64,
    pub height: u64,
    pub fill: String,
}

#[derive(Debug, Clone, Default)]
pub struct Group {
    pub ticket: String,
    pub rects: Vec<Rect>,
    pub texts: Vec<String>,
}

/// Per-ticket groups in document order. Panics if the document is not
/// well-formed XML.
pub fn groups(svg: &str) -> Vec<Group> {
    let mut reader = Reader::from_str(svg);
    let mut out: Vec<Group> = Vec::new();
    let mut in_group = false;
    let mut in_text = false;
    loop {
        match reader.read_event().expect("well-formed svg") {
            Event::Start(e) if e.name().as_ref() == b"g" => {
                let ticket = attr(&e, "data-ticket").unwrap_or_default();
                out.push(Group {
                    ticket,
                    ..Group::default()
                });
                in_group = true;
            }
            Event::End(e) if e.name().as_ref() == b"g" => in_group = false,
            Event::Start(e) if e.name().as_ref() == b"text" => in_text = in_group,
            Event::End(e) if e.name().as_ref() == b"text" => in_text = false,
            Event::Text(t) if in_text => {
                out.last_mut()
                    .unwrap()
                    .texts
                    .push(t.unescape().unwrap().into_owned());
            }
            Event::Empty(e) if in_group && e.name().as_ref() == b"rect" => {
                let num = |k: &str| attr(&e, k).unwrap().parse::<u64>().unwrap();
                out.last_mut().unwrap().rects.push(Rect {
                    class: attr(&e, "class").unwrap_or_default(),
                    x: num("x"),
                    y: num("y"),
                    width: num("width"),
                    height: num("height"),
                    fill: attr(&e, "fill").unwrap_or_default(),
                });
            }
            Event::Eof => break,
            _ => {}
        }
    }
    out
}

fn attr(e: &quick_xml::events::BytesStart<'_>, key: &str) -> Option<String> {
    e.attributes()
        .filter_map(|a| a.ok())
        .find(|a| a.key.as_ref() == key.as_bytes())
        .map(|a| a.unescape_value().unwrap().into_owned())
}

/// Widths a bar of `width` pixels should have for these counts: floor of
/// each share, remainder on the last non-zero segment.
pub fn expected_widths(counts: [u64; 3], width: u64) -> Vec<u64> {
    let total: u64 = counts.iter().sum();
    let mut w: Vec<u64> = counts.iter().map(|c| c * width / total).collect();
    let rest = width - w.iter().sum::<u64>();
    let last = (0..3).rev().find(|&i| counts[i] > 0).unwrap();
    w[last] += rest;
    counts
        .iter()
        .zip(w)
        .filter(|(c, _)| **c > 0)
        .map(|(_, w)| w)
        .collect()
}
