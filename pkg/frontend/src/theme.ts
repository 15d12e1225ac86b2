/** Light/dark theme with localStorage persistence (in-memory fallback). */

export type Theme = "light" | "dark";

const KEY = "phydcm-theme";
let memory: Theme = "dark";

function storage(): Storage | null {
  try {
    return typeof localStorage === "undefined" ? null : localStorage;
  } catch {
    return null;
  }
}

export function getTheme(): Theme {
  const stored = storage()?.getItem(KEY);
  return stored === "light" || stored === "dark" ? stored : memory;
}

export function setTheme(theme: Theme): void {
  memory = theme;
  storage()?.setItem(KEY, theme);
  if (typeof document !== "undefined") {
    document.documentElement.dataset.theme = theme;
  }
}

export function toggleTheme(): Theme {
  const next: Theme = getTheme() === "dark" ? "light" : "dark";
  setTheme(next);
  return next;
}
