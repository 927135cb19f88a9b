/** Thin fetch client over the annotation service API. */
export class ApiError extends Error {
    constructor(status, body) {
        super(body.message);
        this.code = body.error;
        this.status = status;
    }
}
async function asJson(res) {
    if (!res.ok) {
        let body;
        try {
            body = (await res.json());
        }
        catch {
            body = { error: "http-error", message: `HTTP ${res.status}` };
        }
        throw new ApiError(res.status, body);
    }
    return (await res.json());
}
export class ApiClient {
    constructor(base = "", doFetch = (...args) => fetch(...args)) {
        this.base = base;
        this.doFetch = doFetch;
    }
    next(annotator) {
        const q = encodeURIComponent(annotator);
        return this.doFetch(`${this.base}/api/next?annotator=${q}`).then((r) => asJson(r));
    }
    submit(body) {
        return this.doFetch(`${this.base}/api/annotation`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        }).then((r) => asJson(r));
    }
    stats() {
        return this.doFetch(`${this.base}/api/stats`).then((r) => asJson(r));
    }
    imageUrl(path) {
        return this.base + path;
    }
}
