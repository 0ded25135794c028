//! Arrow-plot sampling and rendering for program policies.
//!
//! A policy is sampled at grid-cell centers over the unit box; each sample
//! becomes an arrow from the state to where one environment step would move
//! it (displacement = 0.1 x action). Output is either CSV rows or a small
//! self-contained SVG with the goal and pit regions shaded.

use anyhow::{ensure, Result};

use cmgp_core::agent::{program_action, ProgramsArtifact};
use cmgp_core::envs::{GOAL_SIZE, PIT_HI, PIT_LO, STEP_SCALE};
use cmgp_core::rng::{stream, StreamId};

/// One sampled policy arrow: base point and displacement, in state units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrow {
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
}

/// Sample the program pair at the centers of a `grid x grid` partition of
/// the unit box, in row-major order (x fastest, y ascending).
pub fn grid_arrows(artifact: &ProgramsArtifact, grid: usize, seed: u64) -> Result<Vec<Arrow>> {
    ensure!(
        artifact.state_dim == 2 && artifact.action_dim == 2,
        "arrow plots need a 2-state, 2-action program (got {} states, {} actions)",
        artifact.state_dim,
        artifact.action_dim
    );
    let genomes = artifact.to_genomes::<f64>();
    let mut rng = stream(seed, StreamId::PolicyEval);
    let mut rows = Vec::with_capacity(grid * grid);
    for iy in 0..grid {
        for ix in 0..grid {
            let x = (ix as f64 + 0.5) / grid as f64;
            let y = (iy as f64 + 0.5) / grid as f64;
            let action = program_action(&genomes, &[x, y], -1.0, 1.0, &mut rng);
            rows.push(Arrow {
                x,
                y,
                dx: STEP_SCALE * action[0],
                dy: STEP_SCALE * action[1],
            });
        }
    }
    Ok(rows)
}

/// Canvas edge in pixels; state coordinates scale by this factor.
const SIZE: f64 = 600.0;

/// Render arrows as standalone SVG markup. State y points up, SVG y points
/// down, so vertical coordinates flip. Zero-length arrows become dots.
pub fn to_svg(arrows: &[Arrow]) -> String {
    let px = |v: f64| v * SIZE;
    // Vertical flip for points.
    let py = |v: f64| (1.0 - v) * SIZE;

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    ));
    svg.push('\n');
    svg.push_str(concat!(
        r##"<defs><marker id="tip" viewBox="0 0 10 10" refX="8" refY="5" "##,
        r##"markerWidth="4" markerHeight="4" orient="auto-start-reverse">"##,
        r##"<path d="M 0 0 L 10 5 L 0 10 z" fill="#333"/></marker></defs>"##,
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white" stroke="#999"/>"##
    ));
    svg.push('\n');
    // Goal square (bottom-left corner of the state box).
    svg.push_str(&format!(
        r##"<rect x="0" y="{}" width="{}" height="{}" fill="#3cb371" fill-opacity="0.5"/>"##,
        py(GOAL_SIZE),
        px(GOAL_SIZE),
        px(GOAL_SIZE),
    ));
    svg.push('\n');
    // Pit square (center of the state box).
    svg.push_str(&format!(
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#cd5c5c" fill-opacity="0.5"/>"##,
        px(PIT_LO),
        py(PIT_HI),
        px(PIT_HI - PIT_LO),
        px(PIT_HI - PIT_LO),
    ));
    svg.push('\n');
    for a in arrows {
        if (a.dx * a.dx + a.dy * a.dy).sqrt() < 1e-12 {
            svg.push_str(&format!(
                r##"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="#333"/>"##,
                px(a.x),
                py(a.y)
            ));
        } else {
            svg.push_str(&format!(
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333" stroke-width="1" marker-end="url(#tip)"/>"##,
                px(a.x),
                py(a.y),
                px(a.x + a.dx),
                py(a.y + a.dy)
            ));
        }
        svg.push('\n');
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every instruction decodes to the same operator under both casts when
    /// its gene sits on a half-integer below the op band's midpoint.
    fn op_gene(index: usize) -> f64 {
        -(index as f64) - 0.5
    }

    /// trunc(x) is 0 on (0,1), so [Trunc, Id, Id, Id, Id] is the zero
    /// program and [Trunc, NegCos, Id, Id, Id] is constantly -1.
    fn artifact(second: usize) -> ProgramsArtifact {
        let genome = vec![
            op_gene(18),
            op_gene(second),
            op_gene(16),
            op_gene(16),
            op_gene(16),
        ];
        ProgramsArtifact {
            state_dim: 2,
            action_dim: 2,
            genomes: vec![genome.clone(), genome],
        }
    }

    #[test]
    fn zero_program_yields_zero_length_arrows() {
        let rows = grid_arrows(&artifact(16), 5, 0).unwrap();
        assert_eq!(rows.len(), 25);
        assert!(rows.iter().all(|a| a.dx == 0.0 && a.dy == 0.0));
    }

    #[test]
    fn constant_corner_drive_has_uniform_arrow_length() {
        let rows = grid_arrows(&artifact(5), 20, 0).unwrap();
        assert_eq!(rows.len(), 400);
        let expected = 0.1 * 2.0_f64.sqrt();
        for a in &rows {
            assert_eq!(a.dx, -0.1);
            assert_eq!(a.dy, -0.1);
            let len = (a.dx * a.dx + a.dy * a.dy).sqrt();
            assert!((len - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_covers_cell_centers_in_row_major_order() {
        let rows = grid_arrows(&artifact(16), 2, 0).unwrap();
        let points: Vec<(f64, f64)> = rows.iter().map(|a| (a.x, a.y)).collect();
        assert_eq!(
            points,
            vec![(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
        );
    }

    #[test]
    fn svg_draws_regions_and_one_shape_per_sample() {
        let zeros = to_svg(&grid_arrows(&artifact(16), 3, 0).unwrap());
        assert_eq!(zeros.matches("<circle").count(), 9);
        assert_eq!(zeros.matches("<line").count(), 0);
        assert!(zeros.contains("#3cb371") && zeros.contains("#cd5c5c"));

        let drives = to_svg(&grid_arrows(&artifact(5), 3, 0).unwrap());
        assert_eq!(drives.matches("<line").count(), 9);
        assert!(drives.starts_with("<svg"));
        assert!(drives.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let bad = ProgramsArtifact {
            state_dim: 3,
            action_dim: 2,
            genomes: vec![vec![0.0; 5]; 2],
        };
        assert!(grid_arrows(&bad, 4, 0).is_err());
    }
}
