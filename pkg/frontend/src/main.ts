/**
 * Entry point: mounts the search page onto #app.
 *
 * The service origin comes from <meta name="mathkb-api">, falling back to
 * the page's own origin so the bundle can be served next to the API.
 */

import { ApiClient } from "./api.js";
import { SearchPage } from "./page.js";

function apiBase(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="mathkb-api"]');
  const base = meta?.content.trim();
  return base !== undefined && base !== "" ? base.replace(/\/$/, "") : window.location.origin;
}

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
const page = new SearchPage(root, new ApiClient(apiBase()), window);
void page.start();
