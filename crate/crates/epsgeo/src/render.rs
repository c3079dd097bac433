//! Deterministic SVG scenes: an optional weight-field contour layer, the
//! epsilon-graph edge set, and labeled continuous paths over a fixed frame.
//! Identical inputs must produce byte-identical documents, so every layer is
//! emitted in a fixed order with fixed-precision coordinates and no
//! collection with nondeterministic iteration is used anywhere.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::graph::EpsilonGraph;
use crate::kernel::Kernel;
use crate::path::ContinuousPath;

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 40.0;
/// Marching-squares cell count per axis (one more sample per axis).
const FIELD_CELLS: usize = 200;
const CONTOUR_LEVELS: usize = 10;
const PATH_COLORS: [&str; 6] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Projection {
    lo: [f64; 2],
    scale: f64,
    offset: [f64; 2],
}

impl Projection {
    fn new(domain: &Domain) -> Projection {
        let lo = [domain.lo()[0], domain.lo()[1]];
        let side = [domain.side(0), domain.side(1)];
        let inner = CANVAS - 2.0 * MARGIN;
        let scale = (inner / side[0]).min(inner / side[1]);
        let offset = [
            (CANVAS - scale * side[0]) / 2.0,
            (CANVAS - scale * side[1]) / 2.0,
        ];
        Projection { lo, scale, offset }
    }

    fn x(&self, wx: f64) -> f64 {
        self.offset[0] + (wx - self.lo[0]) * self.scale
    }

    /// Screen y grows downward; world y grows upward.
    fn y(&self, wy: f64) -> f64 {
        CANVAS - self.offset[1] - (wy - self.lo[1]) * self.scale
    }
}

fn px(v: f64) -> String {
    format!("{:.3}", v)
}

/// Render a scene to an SVG document. Layers from back to front: weight-field
/// contours (level sets of x -> f(x, e1) on a 200x200 marching-squares grid),
/// graph edges, labeled paths, domain frame. Only 2-d domains are supported.
pub fn render_scene(
    domain: &Domain,
    graph: Option<&EpsilonGraph>,
    paths: &[(&ContinuousPath, &str)],
    field: Option<&Kernel>,
) -> Result<String> {
    if domain.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "rendering requires a 2-d domain, got dimension {}",
            domain.dim()
        )));
    }
    if let Some(g) = graph {
        if g.dim() != 2 {
            return Err(Error::config("graph dimension does not match the domain"));
        }
    }
    for (p, label) in paths {
        if p.dim() != 2 {
            return Err(Error::config(format!(
                "path \"{}\" is {}-dimensional, domain is 2-dimensional",
                label,
                p.dim()
            )));
        }
    }

    let proj = Projection::new(domain);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {c} {c}\" width=\"{c}\" height=\"{c}\">\n",
        c = CANVAS as usize
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{c}\" height=\"{c}\" fill=\"#ffffff\"/>\n",
        c = CANVAS as usize
    ));

    if let Some(kernel) = field {
        render_field(&mut svg, domain, kernel, &proj);
    }
    if let Some(g) = graph {
        render_edges(&mut svg, g, &proj);
    }
    for (i, (p, label)) in paths.iter().enumerate() {
        render_path(&mut svg, p, label, PATH_COLORS[i % PATH_COLORS.len()], &proj);
    }
    render_frame(&mut svg, domain, &proj);
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn render_frame(svg: &mut String, domain: &Domain, proj: &Projection) {
    let x0 = proj.x(domain.lo()[0]);
    let x1 = proj.x(domain.hi()[0]);
    let y0 = proj.y(domain.lo()[1]);
    let y1 = proj.y(domain.hi()[1]);
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
        px(x0),
        px(y1),
        px(x1 - x0),
        px(y0 - y1)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#000000\">({}, {})</text>\n",
        px(x0),
        px(y0 + 16.0),
        fmt_world(domain.lo()[0]),
        fmt_world(domain.lo()[1])
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#000000\" text-anchor=\"end\">({}, {})</text>\n",
        px(x1),
        px(y1 - 6.0),
        fmt_world(domain.hi()[0]),
        fmt_world(domain.hi()[1])
    ));
}

fn fmt_world(v: f64) -> String {
    format!("{:.4}", v)
}

fn render_edges(svg: &mut String, graph: &EpsilonGraph, proj: &Projection) {
    svg.push_str("<g stroke=\"#999999\" stroke-width=\"0.4\">\n");
    for u in 0..graph.num_vertices() {
        let pu = graph.vertex(u);
        for &v in graph.neighbors(u) {
            let v = v as usize;
            if v <= u {
                continue;
            }
            let pv = graph.vertex(v);
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
                px(proj.x(pu[0])),
                px(proj.y(pu[1])),
                px(proj.x(pv[0])),
                px(proj.y(pv[1]))
            ));
        }
    }
    svg.push_str("</g>\n");
}

fn render_path(svg: &mut String, p: &ContinuousPath, label: &str, color: &str, proj: &Projection) {
    let coords = p.coords();
    let mut pts = String::new();
    for q in coords.chunks_exact(2) {
        if !pts.is_empty() {
            pts.push(' ');
        }
        pts.push_str(&format!("{},{}", px(proj.x(q[0])), px(proj.y(q[1]))));
    }
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n",
        pts, color
    ));
    let mut mid = [0.0f64; 2];
    p.eval(0.5, &mut mid);
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"{}\">{}</text>\n",
        px(proj.x(mid[0]) + 5.0),
        px(proj.y(mid[1]) - 5.0),
        color,
        xml_escape(label)
    ));
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Level sets of x -> f(x, e1) by marching squares on a regular sample grid.
fn render_field(svg: &mut String, domain: &Domain, kernel: &Kernel, proj: &Projection) {
    let samples = FIELD_CELLS + 1;
    let e1 = [1.0, 0.0];
    let mut values = vec![0.0f64; samples * samples];
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for iy in 0..samples {
        let wy = domain.lo()[1] + domain.side(1) * iy as f64 / FIELD_CELLS as f64;
        for ix in 0..samples {
            let wx = domain.lo()[0] + domain.side(0) * ix as f64 / FIELD_CELLS as f64;
            let v = kernel.eval(&[wx, wy], &e1);
            values[iy * samples + ix] = v;
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
    }
    if !(vmin.is_finite() && vmax.is_finite()) || vmax - vmin < 1e-12 {
        return;
    }
    svg.push_str("<g stroke=\"#c0c0c0\" stroke-width=\"0.6\" fill=\"none\">\n");
    for li in 1..=CONTOUR_LEVELS {
        let level = vmin + (vmax - vmin) * li as f64 / (CONTOUR_LEVELS + 1) as f64;
        let mut d = String::new();
        for iy in 0..FIELD_CELLS {
            for ix in 0..FIELD_CELLS {
                let corner = |dx: usize, dy: usize| values[(iy + dy) * samples + (ix + dx)];
                // Corners: 0 = (0,0), 1 = (1,0), 2 = (1,1), 3 = (0,1) in grid
                // coordinates (y up in world terms).
                let v = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                let mut case = 0usize;
                for (bit, val) in v.iter().enumerate() {
                    if *val > level {
                        case |= 1 << bit;
                    }
                }
                if case == 0 || case == 15 {
                    continue;
                }
                let world = |fx: f64, fy: f64| -> (f64, f64) {
                    let wx = domain.lo()[0] + domain.side(0) * (ix as f64 + fx) / FIELD_CELLS as f64;
                    let wy = domain.lo()[1] + domain.side(1) * (iy as f64 + fy) / FIELD_CELLS as f64;
                    (proj.x(wx), proj.y(wy))
                };
                let cross = |va: f64, vb: f64| (level - va) / (vb - va);
                // Edge midpoints in cell-fraction coordinates.
                let bottom = || world(cross(v[0], v[1]), 0.0);
                let right = || world(1.0, cross(v[1], v[2]));
                let top = || world(cross(v[3], v[2]), 1.0);
                let left = || world(0.0, cross(v[0], v[3]));
                let mut seg = |(ax, ay): (f64, f64), (bx, by): (f64, f64)| {
                    d.push_str(&format!(
                        "M{} {} L{} {} ",
                        px(ax),
                        px(ay),
                        px(bx),
                        px(by)
                    ));
                };
                match case {
                    1 | 14 => seg(left(), bottom()),
                    2 | 13 => seg(bottom(), right()),
                    3 | 12 => seg(left(), right()),
                    4 | 11 => seg(right(), top()),
                    6 | 9 => seg(bottom(), top()),
                    7 | 8 => seg(left(), top()),
                    5 | 10 => {
                        let center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                        let flip = (center > level) == (case == 5);
                        if flip {
                            seg(left(), bottom());
                            seg(right(), top());
                        } else {
                            seg(left(), top());
                            seg(bottom(), right());
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        if !d.is_empty() {
            svg.push_str(&format!("<path d=\"{}\"/>\n", d.trim_end()));
        }
    }
    svg.push_str("</g>\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::sampling::{sample_points, DensitySpec};

    fn unit_square() -> Domain {
        Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn empty_scene_is_a_valid_frame() {
        let svg = render_scene(&unit_square(), None, &[], None).unwrap();
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<rect"));
        assert!(!svg.contains("<line"));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn non_planar_domains_are_unsupported() {
        let d3 = Domain::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let err = render_scene(&d3, None, &[], None).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn edge_count_matches_graph() {
        let domain = unit_square();
        let cloud = sample_points(&DensitySpec::uniform(), &domain, 60, 7).unwrap();
        let graph =
            crate::graph::build_graph(&cloud, &[0.1, 0.1], &[0.9, 0.9], 0.25).unwrap();
        let svg = render_scene(&domain, Some(&graph), &[], None).unwrap();
        let lines = svg.matches("<line ").count();
        assert_eq!(lines, graph.num_edges());
    }

    #[test]
    fn rendering_is_byte_identical() {
        let domain = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let w = Expr::parse("1 + 8*exp(0 - ((x1+0.5)*(x1+0.5) + x2*x2)/0.02)").unwrap();
        let kernel = Kernel::weighted_euclidean(w, &domain).unwrap();
        let cloud = sample_points(&DensitySpec::uniform(), &domain, 40, 3).unwrap();
        let graph =
            crate::graph::build_graph(&cloud, &[-0.8, -0.8], &[0.8, 0.8], 0.4).unwrap();
        let path = ContinuousPath::straight(&[-0.8, -0.8], &[0.8, 0.8]).unwrap();
        let a = render_scene(&domain, Some(&graph), &[(&path, "H (n=40)")], Some(&kernel)).unwrap();
        let b = render_scene(&domain, Some(&graph), &[(&path, "H (n=40)")], Some(&kernel)).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("<path d=\"M"), "expected contour segments");
        assert!(a.contains("H (n=40)"));
    }

    #[test]
    fn contours_of_a_radial_bump_stay_near_it() {
        let domain = Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let w = Expr::parse("1 + 8*exp(0 - (x1*x1 + x2*x2)/0.02)").unwrap();
        let kernel = Kernel::weighted_euclidean(w, &domain).unwrap();
        let svg = render_scene(&domain, None, &[], Some(&kernel)).unwrap();
        let proj = Projection::new(&domain);
        let (cx, cy) = (proj.x(0.0), proj.y(0.0));
        let max_r = 0.5 * proj.scale;
        for part in svg.split("M").skip(1) {
            let Some(rest) = part.split('"').next() else {
                continue;
            };
            if !rest.contains(" L") {
                continue;
            }
            let nums: Vec<f64> = rest
                .replace('L', " ")
                .split_whitespace()
                .filter_map(|t| t.parse().ok())
                .collect();
            for q in nums.chunks_exact(2) {
                let dist = ((q[0] - cx).powi(2) + (q[1] - cy).powi(2)).sqrt();
                assert!(
                    dist < max_r,
                    "contour point {:?} is {} px from the bump center",
                    q,
                    dist
                );
            }
        }
    }
}
