import { ApiClient } from "./api.js";
import { ReviewApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8321";
const taskId = params.get("task") ?? "";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}

const app = new ReviewApp(root, new ApiClient(baseUrl));
if (taskId) {
  void app.load(taskId).catch((error) => app.setStatus(`failed to load task: ${String(error)}`));
} else {
  app.setStatus("pass ?task=<task-id>&api=<base-url> in the query string");
}
