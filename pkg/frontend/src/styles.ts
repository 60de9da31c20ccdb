/**
 * Injected stylesheet: card chrome plus the three state animations.
 * Timings are visual defaults, not contract; tests assert classes, not CSS.
 */

export const STYLE_ELEMENT_ID = "df-styles";

export const STYLES = `
.df-root { position: relative; overflow: hidden; width: 100%; height: 100%; }
.df-viewport { position: absolute; inset: 0; }
.df-canvas { position: absolute; transform-origin: 0 0; }
.df-wires { position: absolute; overflow: visible; pointer-events: none; }
.df-wire { stroke: #8a8a8a; stroke-width: 1.5; }

.df-card { border: 1px solid #c9c9c9; border-radius: 8px; background: #fff;
           box-shadow: 0 1px 3px rgba(0,0,0,.12); overflow: hidden; }
.df-card.df-selected { outline: 2px solid #3b82f6; }
.df-text { padding: 8px; white-space: pre-wrap; font: 14px/1.4 sans-serif; }
.df-thumb { width: 100%; height: 100%; object-fit: cover; display: block; }
.df-play { position: absolute; left: 8px; top: 8px; }
.df-waveform { position: absolute; left: 40px; right: 8px; top: 12px; height: 24px;
               background: repeating-linear-gradient(90deg,#9ca3af 0 2px,transparent 2px 5px); }
.df-bubble { position: absolute; left: 4px; bottom: 4px; max-width: calc(100% - 8px);
             padding: 2px 8px; border-radius: 10px; background: #111; color: #fff;
             font: 11px/1.3 sans-serif; }
.df-truncated { position: absolute; right: 4px; top: 4px; font: 10px sans-serif;
                color: #b45309; }

.df-action { background: #f4f4f5; }
.df-action-header { display: flex; justify-content: space-between; padding: 8px;
                    font: 13px sans-serif; }
.df-slot { display: flex; align-items: center; height: 28px; padding: 0 8px; }
.df-port { width: 10px; height: 10px; border-radius: 50%; border: 2px solid #6b7280;
           margin-right: 6px; background: #fff; }
.df-slot.df-connected .df-port { background: #10b981; border-color: #10b981; }
.df-slot.df-snap-target { background: #dbeafe; }
.df-slot-label { font: 12px sans-serif; }

.df-cluster { border: 2px dashed #a78bfa; border-radius: 12px; padding: 6px;
              font: 12px sans-serif; color: #6d28d9; }

.df-hand { position: absolute; left: 12px; top: 50%; transform: translateY(-50%);
           display: flex; flex-direction: column; gap: 8px; z-index: 10; }
.df-hand-card { width: 64px; height: 44px; border-radius: 6px; border: 1px solid #d4d4d8;
                background: #fff; font: 11px sans-serif; cursor: grab; }

.df-info { position: absolute; right: 12px; top: 12px; width: 260px; padding: 10px;
           border-radius: 8px; background: #fff; border: 1px solid #d4d4d8;
           font: 12px sans-serif; z-index: 10; }
.df-info-method { font-weight: 600; margin: 4px 0; }
.df-info-prompt { color: #374151; white-space: pre-wrap; }
.df-influencer { margin: 4px 4px 0 0; font: 11px monospace; }
.df-influencer.df-ghost { opacity: .4; text-decoration: line-through; cursor: default; }

@keyframes df-shake-slow { 0%,100% { transform: rotate(0); } 25% { transform: rotate(-.6deg); }
                           75% { transform: rotate(.6deg); } }
@keyframes df-shake-fast { 0%,100% { transform: rotate(0); } 25% { transform: rotate(-1.4deg); }
                           75% { transform: rotate(1.4deg); } }
@keyframes df-jump { 0% { transform: translateY(0); } 35% { transform: translateY(-10px); }
                     70% { transform: translateY(2px); } 100% { transform: translateY(0); } }
.df-shake-slow { animation: df-shake-slow 1.6s ease-in-out infinite; }
.df-shake-fast { animation: df-shake-fast .5s ease-in-out infinite; }
.df-jump { animation: df-jump .45s ease-out 1; }
`;

export function injectStyles(doc: Document): void {
  if (doc.getElementById(STYLE_ELEMENT_ID) !== null) return;
  const style = doc.createElement("style");
  style.id = STYLE_ELEMENT_ID;
  style.textContent = STYLES;
  doc.head.appendChild(style);
}
