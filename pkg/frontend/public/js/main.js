/** Entry point: resolve the annotator id, mount the app, focus it. */
import { ApiClient } from "./api.js";
import { mount } from "./app.js";
function annotatorId() {
    const fromQuery = new URLSearchParams(window.location.search).get("annotator");
    if (fromQuery) {
        localStorage.setItem("annotator", fromQuery);
        return fromQuery;
    }
    const saved = localStorage.getItem("annotator");
    if (saved)
        return saved;
    const typed = window.prompt("annotator id?") || "anonymous";
    localStorage.setItem("annotator", typed);
    return typed;
}
const root = document.getElementById("app");
if (root) {
    const app = mount(root, new ApiClient(), annotatorId());
    void app.start().then(() => root.focus());
}
