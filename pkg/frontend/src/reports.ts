/**
 * Report browser logic: list reports, trigger assembly over a date range,
 * and render the charts client-side from the structured report.json (the
 * numbers shown are exactly the numbers in the payload).
 */

import { ApiClient, ReportDoc, ReportSummary, SectionChart } from "./api.js";
import { escapeHtml } from "./citations.js";

const PALETTE = ["#2c6e8f", "#c0504d", "#6a9a58", "#8064a2", "#d9962e", "#4bacc6",
  "#7f7f7f", "#b8860b"];

const STANCES = ["supportive", "opposed", "neutral", "unclear"] as const;

function fmt(value: number): string {
  return Number(value.toFixed(2)).toString();
}

export function lineChartSvg(
  dates: string[],
  series: Record<string, number[]>,
  width = 640,
  height = 240,
): string {
  const padL = 40, padR = 10, padT = 10, padB = 34;
  const plotW = width - padL - padR;
  const plotH = height - padT - padB;
  const ymax = Math.max(1, ...Object.values(series).map((vals) => Math.max(...vals)));
  const n = dates.length;
  const xAt = (i: number) => padL + (plotW * i) / Math.max(1, n - 1);
  const yAt = (v: number) => padT + plotH * (1 - v / ymax);

  const parts: string[] = [
    `<svg viewBox="0 0 ${width} ${height}" role="img" class="chart-svg" xmlns="http://www.w3.org/2000/svg">`,
    `<line x1="${padL}" y1="${padT}" x2="${padL}" y2="${padT + plotH}" stroke="#8fa1b0"/>`,
    `<line x1="${padL}" y1="${padT + plotH}" x2="${padL + plotW}" y2="${padT + plotH}" stroke="#8fa1b0"/>`,
    `<text x="${padL - 6}" y="${padT + 4}" text-anchor="end" font-size="10">${ymax}</text>`,
    `<text x="${padL - 6}" y="${padT + plotH + 4}" text-anchor="end" font-size="10">0</text>`,
  ];
  const tick = Math.max(1, Math.floor(n / 6));
  for (let i = 0; i < n; i += tick) {
    parts.push(
      `<text x="${fmt(xAt(i))}" y="${height - 16}" text-anchor="middle" font-size="9">` +
      `${escapeHtml(dates[i].slice(5))}</text>`,
    );
  }
  Object.entries(series).forEach(([name, vals], idx) => {
    const color = PALETTE[idx % PALETTE.length];
    if (n === 1) {
      parts.push(`<circle cx="${fmt(xAt(0))}" cy="${fmt(yAt(vals[0]))}" r="3" fill="${color}"/>`);
    } else {
      const points = vals.map((v, i) => `${fmt(xAt(i))},${fmt(yAt(v))}`).join(" ");
      parts.push(`<polyline points="${points}" fill="none" stroke="${color}" stroke-width="1.6"/>`);
    }
    const lx = padL + 8 + idx * 110;
    parts.push(`<rect x="${lx}" y="${height - 10}" width="10" height="3" fill="${color}"/>`);
    parts.push(`<text x="${lx + 14}" y="${height - 6}" font-size="9">${escapeHtml(name)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("");
}

export function barChartSvg(
  labels: string[],
  values: number[],
  width = 640,
  height = 240,
): string {
  const padL = 10, padT = 10, padB = 10;
  const rowH = (height - padT - padB) / Math.max(1, labels.length);
  const vmax = values.length && Math.max(...values) > 0 ? Math.max(...values) : 1;
  const labelW = 180;
  const parts = [
    `<svg viewBox="0 0 ${width} ${height}" role="img" class="chart-svg" xmlns="http://www.w3.org/2000/svg">`,
  ];
  labels.forEach((label, i) => {
    const y = padT + i * rowH;
    const barW = (width - padL - 10 - labelW - 50) * (values[i] / vmax);
    const color = PALETTE[i % PALETTE.length];
    const shown = label.length <= 26 ? label : label.slice(0, 25) + "…";
    parts.push(
      `<text x="${padL + labelW - 6}" y="${fmt(y + rowH * 0.65)}" text-anchor="end" font-size="10">` +
      `${escapeHtml(shown)}</text>`,
    );
    parts.push(
      `<rect x="${padL + labelW}" y="${fmt(y + rowH * 0.2)}" width="${fmt(Math.max(1, barW))}" ` +
      `height="${fmt(rowH * 0.6)}" fill="${color}"/>`,
    );
    parts.push(
      `<text x="${fmt(padL + labelW + Math.max(1, barW) + 4)}" y="${fmt(y + rowH * 0.65)}" ` +
      `font-size="10">${fmt(values[i])}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export function chartSvg(chart: SectionChart): string {
  if (chart.kind === "stance_series" && chart.dates) {
    const series: Record<string, number[]> = {};
    for (const stance of STANCES) {
      series[stance] = chart[stance] ?? [];
    }
    return lineChartSvg(chart.dates, series);
  }
  if (chart.kind === "topic_weights" && chart.labels && chart.weights) {
    return barChartSvg(chart.labels, chart.weights);
  }
  if (chart.kind === "chat_themes" && chart.labels && chart.counts) {
    return barChartSvg(chart.labels, chart.counts);
  }
  return "";
}

export interface SectionView {
  key: string;
  title: string;
  bodies: { lang: string; text: string }[];
  chartsSvg: string[];
  notices: string[];
  referenceCount: number;
}

export function sectionViews(report: ReportDoc): SectionView[] {
  return report.sections.map((section) => ({
    key: section.key,
    title: report.languages
      .map((lang) => section.title[lang])
      .filter(Boolean)
      .join(" / "),
    bodies: report.languages
      .filter((lang) => section.body[lang])
      .map((lang) => ({ lang, text: section.body[lang] })),
    chartsSvg: section.charts.map(chartSvg).filter(Boolean),
    notices: section.notices,
    referenceCount: section.references.length,
  }));
}

export class ReportBrowser {
  reports: ReportSummary[] = [];
  current: ReportDoc | null = null;
  error: string | null = null;
  busy = false;

  constructor(
    private api: ApiClient,
    private onChange: (browser: ReportBrowser) => void = () => {},
  ) {}

  async refresh(): Promise<void> {
    try {
      this.reports = (await this.api.listReports()).reports;
      this.error = null;
    } catch (error) {
      this.error = (error as Error).message;
    }
    this.onChange(this);
  }

  async generate(from: string, to: string): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.error = null;
    this.onChange(this);
    try {
      const { report_id } = await this.api.createReport(from, to);
      this.current = await this.api.getReport(report_id);
      await this.refresh();
    } catch (error) {
      this.error = (error as Error).message;
    } finally {
      this.busy = false;
      this.onChange(this);
    }
  }

  async open(reportId: string): Promise<void> {
    try {
      this.current = await this.api.getReport(reportId);
      this.error = null;
    } catch (error) {
      this.error = (error as Error).message;
    }
    this.onChange(this);
  }

  htmlUrl(reportId: string): string {
    return this.api.reportHtmlUrl(reportId);
  }
}
