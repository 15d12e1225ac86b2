/**
 * Raw-buffer rendering helpers: the service ships base64 8-bit grayscale,
 * the viewer expands it to RGBA for a canvas ImageData.  No image codec.
 */

export function decodeBase64(data: string): Uint8Array {
  if (typeof atob === "function") {
    const text = atob(data);
    const out = new Uint8Array(text.length);
    for (let i = 0; i < text.length; i++) out[i] = text.charCodeAt(i);
    return out;
  }
  // node (tests); typed loosely so the browser build needs no node typings
  const nodeBuffer = (globalThis as { Buffer?: { from(s: string, enc: string): Uint8Array } }).Buffer;
  if (!nodeBuffer) throw new Error("no base64 decoder available");
  return new Uint8Array(nodeBuffer.from(data, "base64"));
}

export function grayToRgba(
  gray: Uint8Array,
  width: number,
  height: number,
): Uint8ClampedArray<ArrayBuffer> {
  if (gray.length !== width * height) {
    throw new Error(`pixel buffer is ${gray.length} bytes, dims imply ${width * height}`);
  }
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < gray.length; i++) {
    const v = gray[i];
    const j = i * 4;
    rgba[j] = v;
    rgba[j + 1] = v;
    rgba[j + 2] = v;
    rgba[j + 3] = 255;
  }
  return rgba;
}
