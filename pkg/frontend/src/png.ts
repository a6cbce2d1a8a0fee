/** Optional PNG rasterization; SVG remains the primary artifact. */

let loaderFailed = false;

export async function rasterize(svg: string): Promise<Uint8Array | null> {
  if (loaderFailed) return null;
  try {
    const { Resvg } = await import("@resvg/resvg-js");
    return new Resvg(svg).render().asPng();
  } catch {
    // native module missing on this platform; callers warn once
    loaderFailed = true;
    return null;
  }
}
