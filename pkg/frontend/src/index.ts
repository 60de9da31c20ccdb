export * from "./protocol.js";
export * from "./docmodel.js";
export * from "./view.js";
export * from "./wsclient.js";
export * from "./render.js";
export * from "./controller.js";
export * from "./styles.js";

import { CanvasController } from "./controller.js";
import { httpBase } from "./protocol.js";
import { render } from "./render.js";
import { injectStyles } from "./styles.js";
import { ViewState } from "./view.js";
import { CanvasSocket, type CanvasSocketOptions } from "./wsclient.js";

export interface App {
  socket: CanvasSocket;
  view: ViewState;
  controller: CanvasController;
  /** re-render immediately (the socket also renders on every change) */
  refresh: () => void;
}

/**
 * Wire the whole client together: one socket, one view, one controller,
 * re-rendering on every committed change. Configuration is just the server
 * URL and the document to join.
 */
export function bootstrap(
  root: HTMLElement,
  serverUrl: string,
  docId: string,
  options: CanvasSocketOptions = {},
): App {
  injectStyles(root.ownerDocument);
  const socket = new CanvasSocket(serverUrl, docId, options);
  const view = new ViewState();
  const base = httpBase(serverUrl);
  const controller = new CanvasController(
    socket.model,
    view,
    (kind, body) => socket.request(kind, body),
    {
      httpBase: base,
      fetchFn: (url, init) =>
        fetch(url, {
          method: init.method,
          body: init.body as BodyInit,
          headers: init.headers,
        }),
    },
  );
  const refresh = () => {
    view.pruneSelection(socket.model);
    render(root, socket.model, view, {
      assetBase: base,
      infoHooks: {
        onInfluencerClick: (id) => {
          const entity = socket.model.dataCards.get(id);
          if (entity === undefined) return;
          view.centerOn(entity.position, entity.size, {
            width: root.clientWidth || 1280,
            height: root.clientHeight || 800,
          });
          refresh();
        },
      },
    });
  };
  socket.on("change", refresh);
  socket.on("snapshot", refresh);
  socket.connect();
  refresh();
  return { socket, view, controller, refresh };
}
