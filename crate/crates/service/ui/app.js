"use strict";

const $ = (id) => document.getElementById(id);

const PRESETS = {
  LML: [0, 50, 0],
  LLL: [0, 0, 0],
  MLM: [50, 0, 50],
  HHH: [100, 100, 100],
};

const DIMENSIONS = {
  valence: { definition: "How pleasant is this utterance?", anchors: ["unpleasant", "pleasant"], max: 100 },
  arousal: { definition: "How calm or excited does it sound?", anchors: ["calm", "excited"], max: 100 },
  dominance: { definition: "How submissive or in control does the speaker sound?", anchors: ["submissive", "dominant"], max: 100 },
  syntax: { definition: "Is the utterance grammatical?", anchors: ["0 broken", "1 minor errors", "2 fine"], max: 2 },
  appropriateness: { definition: "Is it a fitting reply to the preceding utterance?", anchors: ["0 no", "1 partly", "2 yes"], max: 2 },
};

async function api(path, options = {}) {
  const res = await fetch("/api" + path, {
    headers: { "Content-Type": "application/json" },
    ...options,
  });
  const body = await res.json().catch(() => ({}));
  if (!res.ok) throw new Error(body.error || res.statusText);
  return body;
}

// panels
document.querySelectorAll("nav button").forEach((btn) => {
  btn.addEventListener("click", () => {
    document.querySelectorAll("nav button").forEach((b) => b.classList.toggle("active", b === btn));
    document.querySelectorAll(".panel").forEach((p) => (p.hidden = p.id !== btn.dataset.panel));
  });
});

// chat
let sessionId = null;
let activePreset = null;

function syncOutputs() {
  document.querySelectorAll("output").forEach((o) => (o.value = $(o.htmlFor).value));
}
document.querySelectorAll("input[type=range]").forEach((r) =>
  r.addEventListener("input", () => {
    if (r.id !== "lambda") activePreset = null;
    syncOutputs();
  }),
);
syncOutputs();

document.querySelectorAll("[data-preset]").forEach((btn) =>
  btn.addEventListener("click", () => {
    const [v, a, d] = PRESETS[btn.dataset.preset];
    $("valence").value = v;
    $("arousal").value = a;
    $("dominance").value = d;
    activePreset = btn.dataset.preset;
    syncOutputs();
  }),
);

$("k-choice").addEventListener("change", () => {
  $("k-custom").hidden = $("k-choice").value !== "custom";
});

function steering() {
  const k = $("k-choice").value === "custom" ? Number($("k-custom").value) : Number($("k-choice").value);
  const target = activePreset
    ? activePreset
    : ["valence", "arousal", "dominance"].map((id) => Number($(id).value) / 100);
  return { target, lambda: Number($("lambda").value), k };
}

function appendMessage(speaker, text, config) {
  const div = document.createElement("div");
  div.className = "msg " + speaker;
  div.textContent = text;
  if (config) {
    const [v, a, d] = [config.target.point.valence, config.target.point.arousal, config.target.point.dominance];
    div.title = `V ${v} A ${a} D ${d}, lambda ${config.lambda}, k ${config.k}`;
  }
  $("history").appendChild(div);
  $("history").scrollTop = $("history").scrollHeight;
}

$("chat-form").addEventListener("submit", async (e) => {
  e.preventDefault();
  const text = $("chat-text").value.trim();
  if (!text) return;
  $("chat-send").disabled = true;
  $("chat-error").textContent = "";
  try {
    if (!sessionId) sessionId = (await api("/chat/sessions", { method: "POST" })).session_id;
    const reply = await api(`/chat/sessions/${sessionId}/messages`, {
      method: "POST",
      body: JSON.stringify({ text, ...steering() }),
    });
    appendMessage("user", text, reply.config);
    appendMessage("agent", reply.reply || "(empty reply)", reply.config);
    $("chat-text").value = "";
  } catch (err) {
    $("chat-error").textContent = err.message;
  } finally {
    $("chat-send").disabled = false;
  }
});

// rating
let rater = null;
let prompt = null;

function renderInput(dim) {
  const dim_info = DIMENSIONS[dim];
  const box = $("rating-input");
  box.innerHTML = "";
  if (dim_info.max === 100) {
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = 0;
    slider.max = 100;
    slider.value = 50;
    slider.id = "score";
    const labels = document.createElement("div");
    labels.className = "anchors";
    labels.innerHTML = `<span>${dim_info.anchors[0]}</span><span>${dim_info.anchors[1]}</span>`;
    box.append(slider, labels);
  } else {
    dim_info.anchors.forEach((label, i) => {
      const l = document.createElement("label");
      l.innerHTML = `<input type="radio" name="score" value="${i}"> ${label}`;
      box.appendChild(l);
    });
  }
}

function currentScore() {
  const slider = $("score");
  if (slider) return Number(slider.value);
  const checked = document.querySelector("input[name=score]:checked");
  return checked ? Number(checked.value) : null;
}

async function loadNext() {
  $("rating-error").textContent = "";
  const next = await api(`/rating/next?rater=${encodeURIComponent(rater)}`);
  prompt = next.prompt || null;
  $("rating-task").hidden = next.done;
  $("rating-done").hidden = !next.done;
  if (!prompt) return;
  const dim_info = DIMENSIONS[prompt.dimension];
  $("rating-dimension").textContent = prompt.dimension;
  $("rating-definition").textContent = dim_info.definition;
  $("rating-text").textContent = prompt.text;
  $("rating-preceding").hidden = !prompt.preceding;
  $("rating-preceding").textContent = prompt.preceding || "";
  $("rating-remaining").textContent = `${prompt.remaining} left`;
  renderInput(prompt.dimension);
}

$("rater-form").addEventListener("submit", async (e) => {
  e.preventDefault();
  rater = $("rater-id").value.trim();
  if (!rater) return;
  try {
    await loadNext();
  } catch (err) {
    $("rating-error").textContent = err.message;
  }
});

$("rating-submit").addEventListener("click", async () => {
  const score = currentScore();
  if (score === null || !prompt) return;
  $("rating-submit").disabled = true;
  try {
    await api("/rating", {
      method: "POST",
      body: JSON.stringify({ rater_id: rater, unit_id: prompt.unit_id, dimension: prompt.dimension, score }),
    });
    await loadNext();
  } catch (err) {
    $("rating-error").textContent = err.message;
  } finally {
    $("rating-submit").disabled = false;
  }
});
