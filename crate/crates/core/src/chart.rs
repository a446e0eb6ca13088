//! Grouped horizontal bar charts as self-contained SVG documents.
//!
//! The emitter takes a two-column [`CountTable`] (the dominance or
//! formality split shape) and renders one bar pair per row, longest rows
//! first, with labeled axes and a legend. Output bytes are a pure function
//! of the input table. A CSV sidecar carries the plotted numbers.

use crate::analysis::{AnalysisError, CountTable};

const BAR_HEIGHT: u64 = 14;
const BAR_GAP: u64 = 2;
const GROUP_GAP: u64 = 12;
const MARGIN_LEFT: u64 = 260;
const MARGIN_RIGHT: u64 = 40;
const MARGIN_TOP: u64 = 48;
const MARGIN_BOTTOM: u64 = 44;
const PLOT_WIDTH: u64 = 560;
const COLORS: [&str; 2] = ["#4878a8", "#e1812c"];

/// SVG document plus its CSV data sidecar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartOutput {
    pub svg: String,
    pub csv: String,
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Picks a readable round step for the value axis.
fn tick_step(max_value: u64) -> u64 {
    let raw = (max_value as f64 / 5.0).max(1.0);
    let magnitude = 10f64.powf(raw.log10().floor());
    for factor in [1.0, 2.0, 5.0, 10.0] {
        let step = magnitude * factor;
        if max_value as f64 / step <= 5.5 {
            return step.max(1.0) as u64;
        }
    }
    raw.ceil() as u64
}

/// Renders the grouped bar chart. Fails with `BadShape` unless the table
/// has exactly two columns and at least one row.
pub fn emit_chart_data(table: &CountTable) -> Result<ChartOutput, AnalysisError> {
    if table.col_axis.labels.len() != 2 {
        return Err(AnalysisError::BadShape(format!(
            "grouped bar chart needs exactly 2 columns, got {}",
            table.col_axis.labels.len()
        )));
    }
    if table.cells.is_empty() {
        return Err(AnalysisError::BadShape("table has no rows".to_string()));
    }

    let rows = table.cells.len() as u64;
    let group_height = 2 * BAR_HEIGHT + BAR_GAP;
    let plot_height = rows * (group_height + GROUP_GAP) - GROUP_GAP;
    let width = MARGIN_LEFT + PLOT_WIDTH + MARGIN_RIGHT;
    let height = MARGIN_TOP + plot_height + MARGIN_BOTTOM;

    let max_value = table
        .cells
        .iter()
        .flat_map(|row| row.iter())
        .copied()
        .max()
        .unwrap_or(0)
        .max(1);
    let scale = PLOT_WIDTH as f64 / max_value as f64;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" font-weight=\"bold\">{} by {}</text>\n",
        MARGIN_LEFT,
        escape_xml(&table.row_axis.name),
        escape_xml(&table.col_axis.name),
    ));

    // Legend.
    let mut legend_x = MARGIN_LEFT + 220;
    for (j, label) in table.col_axis.labels.iter().enumerate() {
        svg.push_str(&format!(
            "<rect x=\"{legend_x}\" y=\"10\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            COLORS[j]
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            legend_x + 16,
            escape_xml(label)
        ));
        legend_x += 150;
    }

    // Value grid lines and tick labels.
    let step = tick_step(max_value);
    let mut tick = 0u64;
    while tick <= max_value {
        let x = MARGIN_LEFT as f64 + tick as f64 * scale;
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_height,
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{tick}</text>\n",
            MARGIN_TOP + plot_height + 16,
        ));
        tick += step;
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">sentences</text>\n",
        MARGIN_LEFT + PLOT_WIDTH / 2,
        MARGIN_TOP + plot_height + 34,
    ));

    // Bars, one group per row.
    for (i, row) in table.cells.iter().enumerate() {
        let group_top = MARGIN_TOP + i as u64 * (group_height + GROUP_GAP);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 8,
            group_top + group_height / 2 + 4,
            escape_xml(&table.row_axis.labels[i]),
        ));
        for (j, &value) in row.iter().enumerate() {
            let y = group_top + j as u64 * (BAR_HEIGHT + BAR_GAP);
            let bar_width = value as f64 * scale;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{y}\" width=\"{bar_width:.1}\" height=\"{BAR_HEIGHT}\" fill=\"{}\"/>\n",
                MARGIN_LEFT, COLORS[j],
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{value}</text>\n",
                MARGIN_LEFT as f64 + bar_width + 4.0,
                y + BAR_HEIGHT - 3,
            ));
        }
    }

    // Baseline.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT,
        MARGIN_TOP + plot_height,
    ));
    svg.push_str("</svg>\n");

    let mut csv = format!(
        "{},{},{}\n",
        table.row_axis.name, table.col_axis.labels[0], table.col_axis.labels[1]
    );
    for (i, row) in table.cells.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{}\n",
            table.row_axis.labels[i], row[0], row[1]
        ));
    }

    Ok(ChartOutput { svg, csv })
}
