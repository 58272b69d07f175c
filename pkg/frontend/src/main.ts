import { AnnotationApi } from "./api.js";
import { createApp } from "./app.js";

createApp(document, new AnnotationApi(""), window.localStorage);
