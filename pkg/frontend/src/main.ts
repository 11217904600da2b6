/** Browser bootstrap: binds the chat controller and report browser to the DOM. */

import { ApiClient } from "./api.js";
import { ChatController, ChatViewState } from "./chat.js";
import { renderCitations, renderReferenceList, escapeHtml } from "./citations.js";
import { ReportBrowser, sectionViews } from "./reports.js";

const API_BASE =
  new URLSearchParams(window.location.search).get("api") ?? "http://127.0.0.1:8000";

const api = new ApiClient(API_BASE);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

// --- chat -----------------------------------------------------------------

const messagesEl = el<HTMLDivElement>("messages");
const inputEl = el<HTMLInputElement>("chat-input");
const sendEl = el<HTMLButtonElement>("send");
const retryEl = el<HTMLButtonElement>("retry");
const pendingEl = el<HTMLDivElement>("pending");
const consentOnEl = el<HTMLInputElement>("consent-on");
const consentOffEl = el<HTMLInputElement>("consent-off");
const refPanelEl = el<HTMLDivElement>("reference-panel");

function renderChat(state: ChatViewState): void {
  messagesEl.innerHTML = state.messages
    .map((message) => {
      if (message.role === "assistant") {
        const degraded = message.degraded
          ? '<span class="badge" title="response was repaired">degraded</span>'
          : "";
        return (
          `<div class="bubble assistant">${degraded}` +
          `${renderCitations(message.text, message.references)}` +
          `${renderReferenceList(message.references)}</div>`
        );
      }
      if (message.role === "error") {
        return `<div class="bubble error">${escapeHtml(message.text)}</div>`;
      }
      return `<div class="bubble user">${escapeHtml(message.text)}</div>`;
    })
    .join("");
  pendingEl.style.display = state.pending ? "block" : "none";
  sendEl.disabled = !chat.canSend();
  inputEl.disabled = state.pending;
  retryEl.style.display = chat.canRetry() ? "inline-block" : "none";
  consentOnEl.disabled = chat.consentLocked;
  consentOffEl.disabled = chat.consentLocked;
  const refs = chat.lastReferences();
  refPanelEl.innerHTML = refs.length
    ? `<h3>Sources</h3>${renderReferenceList(refs)}`
    : "<h3>Sources</h3><p class=\"muted\">No citations yet.</p>";
  messagesEl.scrollTop = messagesEl.scrollHeight;
}

const chat = new ChatController(api, renderChat);

consentOnEl.addEventListener("change", () => chat.setConsent(true));
consentOffEl.addEventListener("change", () => chat.setConsent(false));

async function submit(): Promise<void> {
  const text = inputEl.value.trim();
  if (!text || !chat.canSend()) return;
  inputEl.value = "";
  await chat.send(text);
}

sendEl.addEventListener("click", () => void submit());
inputEl.addEventListener("keydown", (event) => {
  if (event.key === "Enter") void submit();
});
retryEl.addEventListener("click", () => void chat.retry());

// --- report browser ---------------------------------------------------------

const reportListEl = el<HTMLUListElement>("report-list");
const reportViewEl = el<HTMLDivElement>("report-view");
const reportErrorEl = el<HTMLDivElement>("report-error");
const fromEl = el<HTMLInputElement>("report-from");
const toEl = el<HTMLInputElement>("report-to");
const generateEl = el<HTMLButtonElement>("generate-report");

function renderBrowser(browser: ReportBrowser): void {
  generateEl.disabled = browser.busy;
  reportErrorEl.textContent = browser.error ?? "";
  reportListEl.innerHTML = browser.reports
    .map(
      (r) =>
        `<li><a href="#" data-report="${escapeHtml(r.id)}">${escapeHtml(r.id)}</a> ` +
        `<span class="muted">${escapeHtml(r.window.start.slice(0, 10))} – ` +
        `${escapeHtml(r.window.end.slice(0, 10))}</span> ` +
        `<a href="${browser.htmlUrl(r.id)}" target="_blank">html</a></li>`,
    )
    .join("");
  if (browser.current) {
    const nav = sectionViews(browser.current)
      .map((s) => `<li><a href="#sec-${escapeHtml(s.key)}">${escapeHtml(s.title)}</a></li>`)
      .join("");
    const sections = sectionViews(browser.current)
      .map((section) => {
        const bodies = section.bodies
          .map(
            (b) =>
              `<div class="body-block"><span class="lang-label">${escapeHtml(b.lang)}</span>` +
              `<p>${escapeHtml(b.text)}</p></div>`,
          )
          .join("");
        const notices = section.notices
          .map((n) => `<div class="notice">${escapeHtml(n)}</div>`)
          .join("");
        return (
          `<section id="sec-${escapeHtml(section.key)}">` +
          `<h3>${escapeHtml(section.title)}</h3>${notices}${bodies}` +
          `${section.chartsSvg.join("")}` +
          `<p class="muted">${section.referenceCount} citation(s)</p></section>`
        );
      })
      .join("");
    reportViewEl.innerHTML = `<ol class="toc">${nav}</ol>${sections}`;
  }
}

const browser = new ReportBrowser(api, renderBrowser);

generateEl.addEventListener("click", () => {
  void browser.generate(
    `${fromEl.value}T00:00:00Z`,
    `${toEl.value}T23:59:59Z`,
  );
});
reportListEl.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const reportId = target.getAttribute("data-report");
  if (reportId) {
    event.preventDefault();
    void browser.open(reportId);
  }
});

void browser.refresh();
renderChat(chat.state);
