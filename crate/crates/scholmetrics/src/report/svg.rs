//! Minimal grayscale heatmap rendering for year matrices.

use crate::metrics::YearMatrix;
use std::fmt::Write as _;

const CELL: usize = 14;
const LABEL_WIDTH: usize = 160;
const LABEL_HEIGHT: usize = 40;
const FONT_SIZE: usize = 10;

/// Renders a year matrix as an SVG grid. Cell luminance is log-scaled:
/// `shade = ln(1 + n) / ln(1 + max)`, zero = white, max count = black.
/// The scaling formula is recorded in a comment at the top of the SVG so
/// the encoding is self-describing.
pub fn year_matrix_heatmap(matrix: &YearMatrix, title: &str) -> String {
    let rows = matrix.row_keys.len();
    let cols = matrix.col_years.len();
    let width = LABEL_WIDTH + cols * CELL;
    let height = LABEL_HEIGHT + rows * CELL;
    let max = matrix.max_cell();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        out,
        "<!-- config: scale=log-luminance; shade=ln(1+count)/ln(1+max); max={max}; \
         rows={rows}; cols={cols}; title={} -->",
        escape(title)
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"4\" y=\"{}\" font-size=\"{FONT_SIZE}\" font-family=\"monospace\">{}</text>",
        FONT_SIZE + 2,
        escape(title)
    );

    let denom = ((max + 1) as f64).ln();
    for (r, key) in matrix.row_keys.iter().enumerate() {
        let y = LABEL_HEIGHT + r * CELL;
        let _ = writeln!(
            out,
            "<text x=\"4\" y=\"{}\" font-size=\"{FONT_SIZE}\" font-family=\"monospace\">{}</text>",
            y + CELL - 3,
            escape(key)
        );
        for c in 0..cols {
            let count = matrix.get(r, c);
            let shade = if max == 0 {
                0.0
            } else {
                ((count + 1) as f64).ln() / denom
            };
            let level = (255.0 - shade * 255.0).round() as u8;
            let x = LABEL_WIDTH + c * CELL;
            let _ = writeln!(
                out,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"rgb({level},{level},{level})\" stroke=\"rgb(220,220,220)\"/>"
            );
        }
    }
    for (c, year) in matrix.col_years.iter().enumerate() {
        let x = LABEL_WIDTH + c * CELL;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"{FONT_SIZE}\" font-family=\"monospace\" \
             transform=\"rotate(-90 {} {})\">{year}</text>",
            x + 3,
            LABEL_HEIGHT - 4,
            x + 3,
            LABEL_HEIGHT - 4
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            // "--" is invalid inside an XML comment; break the pair.
            '-' => out.push_str("&#45;"),
            _ => out.push(ch),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> YearMatrix {
        YearMatrix::from_parts(
            vec!["alpha".into(), "beta".into()],
            vec![2010, 2011, 2012],
            vec![0, 3, 9, 1, 0, 0],
            vec![0, 0],
        )
    }

    #[test]
    fn heatmap_has_one_rect_per_cell_plus_background() {
        let svg = year_matrix_heatmap(&sample(), "references");
        assert_eq!(svg.matches("<rect").count(), 2 * 3 + 1);
        assert_eq!(svg.matches("<text").count(), 1 + 2 + 3);
        assert!(svg.contains("scale=log-luminance"));
        assert!(svg.contains("max=9"));
    }

    #[test]
    fn zero_cells_are_white_and_max_is_black() {
        let svg = year_matrix_heatmap(&sample(), "t");
        assert!(svg.contains("fill=\"rgb(255,255,255)\""));
        assert!(svg.contains("fill=\"rgb(0,0,0)\""));
    }

    #[test]
    fn all_zero_matrix_renders_without_nan() {
        let m = YearMatrix::from_parts(vec!["v".into()], vec![2010], vec![0], vec![0]);
        let svg = year_matrix_heatmap(&m, "empty");
        assert!(!svg.contains("NaN"));
        assert!(svg.contains("max=0"));
    }

    #[test]
    fn labels_are_xml_escaped() {
        let m =
            YearMatrix::from_parts(vec!["a&b <c>".into()], vec![2010], vec![1], vec![0]);
        let svg = year_matrix_heatmap(&m, "x--y");
        assert!(svg.contains("a&amp;b &lt;c&gt;"));
        assert!(svg.contains("x&#45;&#45;y"));
        assert!(!svg.contains("x--y"));
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        assert_eq!(
            year_matrix_heatmap(&sample(), "t"),
            year_matrix_heatmap(&sample(), "t")
        );
    }
}
