/** Browser entry point: resolve the service base URL and boot the app.
 *
 * The base URL comes from, in order: a `?service=` query parameter,
 * the `service-base-url` meta tag, or same-origin relative paths.
 */

import { ServiceClient } from "./api.js";
import { initApp } from "./app.js";

function resolveBaseUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const fromParam = params.get("service");
  if (fromParam !== null && fromParam !== "") {
    return fromParam;
  }
  const meta = document.querySelector('meta[name="service-base-url"]');
  return meta?.getAttribute("content") ?? "";
}

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root !== null) {
    initApp(root, new ServiceClient(resolveBaseUrl()));
  }
});
