import { AnnotationApi } from "./api.js";
import { renderApp } from "./render.js";
import { SessionController } from "./session.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8000";
const flowId = params.get("flow");
const sessionId = params.get("session");

const controller = new SessionController(new AnnotationApi(apiBase));
const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");
renderApp(root, controller);

if (sessionId) {
  void controller.resume(sessionId);
} else if (flowId) {
  void controller.start(flowId);
}
