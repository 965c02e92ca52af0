//! SVG snapshots of configurations.
//!
//! This is the one place coordinates leave exact arithmetic: rationals
//! are converted to f64 for display only. Output is deterministic for a
//! given configuration, points drawn sorted by id and segments in
//! canonical order.

use untangle_core::{render_coord, Color, Configuration, Coord, Flip, Segment};

fn approx(c: &Coord) -> f64 {
    // Good enough for display; exactness is never needed here.
    let text = render_coord(c);
    let (n, d) = text.split_once('/').expect("rationals render as p/q");
    let n: f64 = n.parse().unwrap_or(0.0);
    let d: f64 = d.parse().unwrap_or(1.0);
    n / d
}

struct Frame {
    min_x: f64,
    min_y: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn of(c: &Configuration) -> Frame {
        let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in c.points().iter() {
            let (x, y) = (approx(&p.x), approx(&p.y));
            lo_x = lo_x.min(x);
            hi_x = hi_x.max(x);
            lo_y = lo_y.min(y);
            hi_y = hi_y.max(y);
        }
        if !lo_x.is_finite() {
            return Frame {
                min_x: 0.0,
                min_y: 0.0,
                width: 1.0,
                height: 1.0,
            };
        }
        let span = (hi_x - lo_x).max(hi_y - lo_y).max(1.0);
        let margin = span * 0.08;
        Frame {
            min_x: lo_x - margin,
            min_y: lo_y - margin,
            width: (hi_x - lo_x) + 2.0 * margin,
            height: (hi_y - lo_y) + 2.0 * margin,
        }
    }

    fn scale(&self) -> f64 {
        self.width.max(self.height)
    }

    /// Flips y so larger y renders upward.
    fn y(&self, y: f64) -> f64 {
        self.min_y + self.height - (y - self.min_y)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

/// Renders points as circles (colored for red-blue instances) and
/// segments as lines. With a highlight flip, its removed pair is drawn
/// dashed and its added pair bold; the added pair is drawn even though it
/// is not part of the configuration.
pub fn render_svg(c: &Configuration, highlight: Option<&Flip>) -> String {
    let frame = Frame::of(c);
    let sw = frame.scale() * 0.008;
    let r = frame.scale() * 0.014;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"640\" height=\"640\">\n",
        fmt(frame.min_x),
        fmt(frame.min_y),
        fmt(frame.width),
        fmt(frame.height)
    ));
    let endpoint = |s: Segment| {
        let a = c.points().point(s.a());
        let b = c.points().point(s.b());
        (
            approx(&a.x),
            frame.y(approx(&a.y)),
            approx(&b.x),
            frame.y(approx(&b.y)),
        )
    };
    let removed: Vec<Segment> = highlight
        .map(|f| {
            let (r1, r2) = f.removed();
            vec![r1, r2]
        })
        .unwrap_or_default();
    for &s in c.edges().keys() {
        let (x1, y1, x2, y2) = endpoint(s);
        if removed.contains(&s) {
            out.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-width=\"{}\" stroke-dasharray=\"{} {}\"/>\n",
                fmt(x1), fmt(y1), fmt(x2), fmt(y2), fmt(sw), fmt(3.0 * sw), fmt(2.0 * sw),
            ));
        } else {
            out.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"{}\"/>\n",
                fmt(x1), fmt(y1), fmt(x2), fmt(y2), fmt(sw),
            ));
        }
    }
    if let Some(f) = highlight {
        let (a1, a2) = f.added();
        for s in [a1, a2] {
            let (x1, y1, x2, y2) = endpoint(s);
            out.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\" stroke-width=\"{}\"/>\n",
                fmt(x1), fmt(y1), fmt(x2), fmt(y2), fmt(2.5 * sw),
            ));
        }
    }
    for p in c.points().iter() {
        let fill = match p.color {
            Some(Color::Red) => "#cc3333",
            Some(Color::Blue) => "#3366cc",
            None => "#222222",
        };
        out.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n",
            fmt(approx(&p.x)),
            fmt(frame.y(approx(&p.y))),
            fmt(r),
            fill
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use untangle_core::{coord, Point, PointId, PointSet, Version};

    fn square() -> Configuration {
        let ps = PointSet::new(vec![
            Point::new(PointId(1), coord(0), coord(0)),
            Point::new(PointId(2), coord(0), coord(2)),
            Point::new(PointId(3), coord(2), coord(2)),
            Point::new(PointId(4), coord(2), coord(0)),
        ])
        .unwrap()
        .into_shared();
        Configuration::new(
            Arc::clone(&ps),
            [
                Segment::new(PointId(1), PointId(3)),
                Segment::new(PointId(2), PointId(4)),
            ],
            Version::MM,
        )
    }

    #[test]
    fn square_has_four_circles_two_lines() {
        let svg = render_svg(&square(), None);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("<line").count(), 2);
    }

    #[test]
    fn highlight_adds_bold_pair() {
        let c = square();
        let f = Flip::new(
            (
                Segment::new(PointId(1), PointId(3)),
                Segment::new(PointId(2), PointId(4)),
            ),
            (
                Segment::new(PointId(1), PointId(2)),
                Segment::new(PointId(3), PointId(4)),
            ),
        );
        let svg = render_svg(&c, Some(&f));
        assert_eq!(svg.matches("<line").count(), 4);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
    }

    #[test]
    fn deterministic_bytes() {
        let c = square();
        assert_eq!(render_svg(&c, None), render_svg(&c, None));
    }
}
